#include "sspop/summary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sspop {

DiscreteSummary summarize(std::span<const int> draws, double level) {
  if (draws.empty()) throw std::invalid_argument("no draws to summarize");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("credible level must be in (0, 1)");
  }

  std::map<int, long> counts;
  double mean = 0.0;
  for (const int d : draws) {
    ++counts[d];
    mean += d;
  }
  mean /= static_cast<double>(draws.size());

  DiscreteSummary out;
  out.mean = mean;
  out.hpd_level = level;

  // lower median from the sorted counts
  const long half = (static_cast<long>(draws.size()) + 1) / 2;
  long cum = 0;
  for (const auto& [value, c] : counts) {
    cum += c;
    if (cum >= half) {
      out.median = value;
      break;
    }
  }

  // mode: largest mass, ties toward smaller value
  long best = -1;
  for (const auto& [value, c] : counts) {
    if (c > best) {
      best = c;
      out.mode = value;
    }
  }

  // greedy HPD: take cells by descending mass until the level is reached
  std::vector<std::pair<int, long>> cells(counts.begin(), counts.end());
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const double total = static_cast<double>(draws.size());
  double captured = 0.0;
  for (const auto& [value, c] : cells) {
    out.hpd_set.push_back(value);
    captured += c / total;
    if (captured >= level) break;
  }
  std::sort(out.hpd_set.begin(), out.hpd_set.end());
  out.hpd_lo = out.hpd_set.front();
  out.hpd_hi = out.hpd_set.back();
  out.mass_captured = captured;
  return out;
}

std::vector<DensityRow> density_table(const SizePrior& prior, std::span<const int> draws,
                                      int step) {
  if (step < 1) throw std::invalid_argument("grid step must be positive");
  const int lo = prior.n();
  const int hi = prior.n_max();
  const int buckets = (hi - lo) / step + 1;

  std::vector<DensityRow> rows(buckets);
  for (int b = 0; b < buckets; ++b) {
    rows[b] = {lo + b * step, 0.0, 0.0};
  }
  for (int N = lo; N <= hi; ++N) {
    rows[(N - lo) / step].prior_mass += prior.mass(N);
  }
  long in_range = 0;
  for (const int d : draws) {
    if (d < lo || d > hi) continue;
    rows[(d - lo) / step].posterior_mass += 1.0;
    ++in_range;
  }
  if (in_range > 0) {
    for (auto& r : rows) r.posterior_mass /= static_cast<double>(in_range);
  }
  return rows;
}

SplitChainDiagnostic split_chain_diagnostic(const PosteriorDraws& draws,
                                            double warn_threshold) {
  SplitChainDiagnostic diag;
  if (draws.N.empty()) return diag;

  std::map<int, std::vector<double>> by_chain;
  for (std::size_t i = 0; i < draws.N.size(); ++i) {
    by_chain[draws.chain[i]].push_back(draws.N[i]);
  }
  double pooled_var = 0.0;
  double pooled_mean = 0.0;
  for (const int N : draws.N) pooled_mean += N;
  pooled_mean /= static_cast<double>(draws.N.size());
  for (const int N : draws.N) {
    pooled_var += (N - pooled_mean) * (N - pooled_mean);
  }
  pooled_var /= std::max<std::size_t>(1, draws.N.size() - 1);
  if (pooled_var <= 0.0) return diag;

  for (const auto& [chain, xs] : by_chain) {
    const std::size_t half = xs.size() / 2;
    if (half < 2) continue;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) m1 += xs[i];
    for (std::size_t i = half; i < xs.size(); ++i) m2 += xs[i];
    m1 /= static_cast<double>(half);
    m2 /= static_cast<double>(xs.size() - half);
    const double se = std::sqrt(pooled_var * (1.0 / half + 1.0 / (xs.size() - half)));
    const double z = std::abs(m1 - m2) / se;
    diag.max_discrepancy_z = std::max(diag.max_discrepancy_z, z);
  }
  diag.warn = diag.max_discrepancy_z > warn_threshold;
  return diag;
}

}  // namespace sspop
