#include "sspop/ssproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sspop/parallel.hpp"

namespace sspop {

namespace {

// Binary indexed tree over nonnegative weights supporting O(log n) weighted
// selection and weight updates; the workhorse of every PPSWOR loop.
class FenwickSampler {
 public:
  explicit FenwickSampler(std::span<const double> weights)
      : size_(static_cast<int>(weights.size())), tree_(weights.size() + 1, 0.0) {
    for (int i = 0; i < size_; ++i) tree_[i + 1] = weights[i];
    for (int i = 1; i <= size_; ++i) {
      const int parent = i + (i & -i);
      if (parent <= size_) tree_[parent] += tree_[i];
    }
    log2_ = 1;
    while ((log2_ << 1) <= size_) log2_ <<= 1;
  }

  void add(int index, double delta) {
    for (int i = index + 1; i <= size_; i += i & -i) tree_[i] += delta;
  }

  // Smallest index with cumulative weight exceeding target.
  int find(double target) const {
    int pos = 0;
    for (int step = log2_; step > 0; step >>= 1) {
      const int next = pos + step;
      if (next <= size_ && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return std::min(pos, size_ - 1);
  }

 private:
  int size_;
  int log2_;
  std::vector<double> tree_;
};

struct SpectrumClasses {
  std::vector<int> sizes;
  std::vector<long> counts;
  long total_units = 0;
};

SpectrumClasses to_classes(const std::map<int, long>& spectrum) {
  SpectrumClasses c;
  for (const auto& [size, count] : spectrum) {
    if (size < 1) throw std::invalid_argument("spectrum sizes must be >= 1");
    if (count < 1) throw std::invalid_argument("spectrum counts must be >= 1");
    c.sizes.push_back(size);
    c.counts.push_back(count);
    c.total_units += count;
  }
  return c;
}

// One PPSWOR sample of n units from the class spectrum; adds the per-class
// selection counts into `included`.
void simulate_inclusions(const SpectrumClasses& classes, int n, Rng& rng,
                         std::span<long> included) {
  const int m = static_cast<int>(classes.sizes.size());
  std::vector<long> remaining(classes.counts.begin(), classes.counts.end());
  std::vector<double> weights(m);
  double total = 0.0;
  for (int c = 0; c < m; ++c) {
    weights[c] = static_cast<double>(classes.sizes[c]) * remaining[c];
    total += weights[c];
  }
  FenwickSampler tree(weights);
  for (int k = 0; k < n; ++k) {
    const int c = tree.find(rng.u01() * total);
    ++included[c];
    --remaining[c];
    tree.add(c, -static_cast<double>(classes.sizes[c]));
    total -= classes.sizes[c];
  }
}

// Shared accumulation for the prevalence estimators: inclusion and presence
// tallies per size class, pooled over simulation blocks whose unobserved
// fill may differ.
struct PooledInclusions {
  std::map<int, long> included;
  std::map<int, long> present;  // unit count x simulations
};

double horvitz_thompson(const ObservedSequence& data, const PooledInclusions& pool) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const int size = data.unit_sizes[i];
    const long inc = pool.included.at(size);
    if (inc == 0) {
      throw std::runtime_error(
          "inclusion probability estimated as zero for size class " +
          std::to_string(size) + "; increase n_sims");
    }
    const double pi = static_cast<double>(inc) / static_cast<double>(pool.present.at(size));
    num += data.trait[i] / pi;
    den += 1.0 / pi;
  }
  return num / den;
}

}  // namespace

std::vector<int> ppswor_draw(const SizedPopulation& pop, int n, Rng& rng) {
  pop.validate();
  const int N = pop.size();
  if (n < 1 || n > N) {
    throw std::invalid_argument("sample size " + std::to_string(n) +
                                " outside 1.." + std::to_string(N));
  }
  std::vector<double> weights(pop.sizes.begin(), pop.sizes.end());
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  FenwickSampler tree(weights);
  std::vector<int> order;
  order.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (total <= 0.0) {
      throw std::runtime_error("population weight exhausted after " +
                               std::to_string(k) + " draws");
    }
    const int idx = tree.find(rng.u01() * total);
    order.push_back(idx);
    tree.add(idx, -weights[idx]);
    total -= weights[idx];
  }
  return order;
}

double log_ordered_sequence_prob(const SizedPopulation& pop, std::span<const int> g) {
  pop.validate();
  std::vector<char> seen(pop.size(), 0);
  double r = 0.0;
  for (const int u : pop.sizes) r += u;
  double log_prob = 0.0;
  for (const int idx : g) {
    if (idx < 0 || idx >= pop.size()) throw std::invalid_argument("index out of range");
    if (seen[idx]) throw std::invalid_argument("repeated index in sequence");
    seen[idx] = 1;
    const double u = pop.sizes[idx];
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    log_prob += std::log(u) - std::log(r);
    r -= u;
  }
  return log_prob;
}

std::map<int, double> ss_inclusion_probs(const std::map<int, long>& spectrum, int n,
                                         int n_sims, std::uint64_t seed, int threads) {
  if (n_sims < 1000) throw std::invalid_argument("inclusion estimation needs n_sims >= 1000");
  const SpectrumClasses classes = to_classes(spectrum);
  if (classes.total_units < n) {
    throw std::invalid_argument("spectrum holds " + std::to_string(classes.total_units) +
                                " units, fewer than the sample size " + std::to_string(n));
  }
  const int m = static_cast<int>(classes.sizes.size());

  constexpr int kSimsPerBlock = 64;
  const int blocks = (n_sims + kSimsPerBlock - 1) / kSimsPerBlock;
  std::vector<std::vector<long>> block_included(blocks, std::vector<long>(m, 0));
  parallel_for(blocks, threads, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    const int sims = std::min(kSimsPerBlock, n_sims - b * kSimsPerBlock);
    for (int s = 0; s < sims; ++s) {
      simulate_inclusions(classes, n, rng, block_included[b]);
    }
  });

  std::map<int, double> probs;
  for (int c = 0; c < m; ++c) {
    long inc = 0;
    for (int b = 0; b < blocks; ++b) inc += block_included[b][c];
    probs[classes.sizes[c]] =
        static_cast<double>(inc) /
        (static_cast<double>(n_sims) * static_cast<double>(classes.counts[c]));
  }
  return probs;
}

double ss_prevalence_plugin(const ObservedSequence& data, const UnitSizeModel& model,
                            int N, int n_sims, std::uint64_t seed, int threads) {
  data.validate();
  if (!data.has_trait()) throw std::invalid_argument("prevalence needs a trait column");
  if (N < data.n()) throw std::invalid_argument("population size below sample size");
  if (n_sims < 1) throw std::invalid_argument("n_sims must be positive");

  std::map<int, long> obs_hist;
  for (const int u : data.unit_sizes) ++obs_hist[u];

  // Blocks refresh the model-predictive fill of the N-n unobserved sizes so
  // the estimate integrates over that uncertainty too.
  const int blocks = std::clamp(n_sims / 50, 1, 200);
  std::vector<PooledInclusions> block_pools(blocks);
  parallel_for(blocks, threads, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    std::map<int, long> spectrum = obs_hist;
    for (int i = 0; i < N - data.n(); ++i) ++spectrum[model.sample(rng)];
    const int sims = n_sims / blocks + (b < n_sims % blocks ? 1 : 0);
    const SpectrumClasses classes = to_classes(spectrum);
    const int m = static_cast<int>(classes.sizes.size());
    std::vector<long> included(m, 0);
    for (int s = 0; s < sims; ++s) simulate_inclusions(classes, data.n(), rng, included);
    for (int c = 0; c < m; ++c) {
      block_pools[b].included[classes.sizes[c]] += included[c];
      block_pools[b].present[classes.sizes[c]] +=
          classes.counts[c] * static_cast<long>(sims);
    }
  });

  PooledInclusions pool;
  for (const auto& [u, c] : obs_hist) {
    pool.included[u] = 0;
    pool.present[u] = 0;
  }
  for (const auto& bp : block_pools) {
    for (const auto& [size, inc] : bp.included) pool.included[size] += inc;
    for (const auto& [size, pres] : bp.present) pool.present[size] += pres;
  }
  return horvitz_thompson(data, pool);
}

double ss_prevalence_posterior(const ObservedSequence& data,
                               std::span<const std::vector<int>> unobs_snapshots,
                               int n_sims, std::uint64_t seed, int threads) {
  data.validate();
  if (!data.has_trait()) throw std::invalid_argument("prevalence needs a trait column");
  if (unobs_snapshots.empty()) {
    throw std::invalid_argument("posterior prevalence needs retained size snapshots");
  }
  if (n_sims < 1) throw std::invalid_argument("n_sims must be positive");

  std::map<int, long> obs_hist;
  for (const int u : data.unit_sizes) ++obs_hist[u];

  const int blocks = static_cast<int>(unobs_snapshots.size());
  std::vector<PooledInclusions> block_pools(blocks);
  parallel_for(blocks, threads, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    std::map<int, long> spectrum = obs_hist;
    for (const int u : unobs_snapshots[b]) ++spectrum[u];
    const int sims = std::max(1, n_sims / blocks + (b < n_sims % blocks ? 1 : 0));
    const SpectrumClasses classes = to_classes(spectrum);
    const int m = static_cast<int>(classes.sizes.size());
    std::vector<long> included(m, 0);
    for (int s = 0; s < sims; ++s) simulate_inclusions(classes, data.n(), rng, included);
    for (int c = 0; c < m; ++c) {
      block_pools[b].included[classes.sizes[c]] += included[c];
      block_pools[b].present[classes.sizes[c]] +=
          classes.counts[c] * static_cast<long>(sims);
    }
  });

  PooledInclusions pool;
  for (const auto& [u, c] : obs_hist) {
    pool.included[u] = 0;
    pool.present[u] = 0;
  }
  for (const auto& bp : block_pools) {
    for (const auto& [size, inc] : bp.included) pool.included[size] += inc;
    for (const auto& [size, pres] : bp.present) pool.present[size] += pres;
  }
  return horvitz_thompson(data, pool);
}

}  // namespace sspop
