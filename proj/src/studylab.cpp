#include "sspop/studylab.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "sspop/errors.hpp"
#include "sspop/numeric.hpp"
#include "sspop/parallel.hpp"
#include "sspop/ssproc.hpp"
#include "sspop/summary.hpp"

namespace sspop {

namespace {

struct GroupSplit {
  int n_infected;
  int n_uninfected;
  double degree_infected;
  double degree_uninfected;
};

GroupSplit split_groups(int N, double prevalence, double mean_degree, double omega) {
  const int n_inf = static_cast<int>(std::lround(prevalence * N));
  const int n_uninf = N - n_inf;
  if (n_inf < 1 || n_uninf < 1) {
    throw std::invalid_argument("prevalence leaves an empty group");
  }
  const double d_uninf = mean_degree * N / (n_inf * omega + n_uninf);
  return {n_inf, n_uninf, omega * d_uninf, d_uninf};
}

int weighted_pick(std::span<const double> weights, double total, Rng& rng) {
  const double u = rng.u01() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

SizePrior PriorSpec::build(int n) const {
  const bool has_target = mode || median || mean || lower_quartile;
  switch (kind) {
    case SizePriorKind::kFlat: {
      const int top = n_max > 0 ? n_max : default_n_max(kind, n);
      return SizePrior::flat(n, top);
    }
    case SizePriorKind::kFactorial: {
      const int top = n_max > 0 ? n_max : default_n_max(kind, n, 0, 0, l);
      return SizePrior::factorial(n, top, l);
    }
    case SizePriorKind::kBetaProportion: {
      double a = alpha, b = beta;
      if (mean && !lower_quartile) {
        // Mean-only target: calibrate against the truncated grid, the way
        // the reference simulation protocol specifies its low/accurate/high
        // prior means.
        const int top = n_max > 0 ? n_max : 20 * n;
        b = beta_from_grid_mean(n, top, a, *mean);
        return SizePrior::beta_proportion(n, top, a, b);
      }
      if (has_target) {
        std::tie(a, b) = beta_from_elicitation(
            n, BetaElicitation{.mode = mode, .median = median, .mean = mean,
                               .lower_quartile = lower_quartile, .alpha = alpha});
      } else if (!(b > 0.0)) {
        throw ElicitationError("beta prior needs beta > 0 or an elicitation target");
      }
      const int top = n_max > 0 ? n_max : default_n_max(kind, n, a, b);
      return SizePrior::beta_proportion(n, top, a, b);
    }
    case SizePriorKind::kCustom:
      throw std::invalid_argument("custom priors cannot be built from a spec");
  }
  throw std::logic_error("unreachable");
}

void StudyDesign::validate() const {
  if (population_size < 2) throw std::invalid_argument("population too small");
  if (!(prevalence > 0.0 && prevalence < 1.0)) {
    throw std::invalid_argument("prevalence must lie in (0, 1)");
  }
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  if (!(alpha_h > 0.0)) throw std::invalid_argument("alpha_h must be positive");
  if (sample_size < 1 || sample_size > population_size) {
    throw std::invalid_argument("sample size must lie in 1..N");
  }
  if (num_seeds < 1 || num_seeds > sample_size) {
    throw std::invalid_argument("seed count must lie in 1..n");
  }
  if (coupons < 1) throw std::invalid_argument("coupons must be positive");
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
  mcmc.validate();
}

BlockProbabilities block_probabilities(int N, double prevalence, double mean_degree,
                                       double omega, double alpha_h) {
  const GroupSplit g = split_groups(N, prevalence, mean_degree, omega);
  const double ni = g.n_infected, nu = g.n_uninfected;

  // No-homophily baseline: multiplicative activity model p_gh = theta_g
  // theta_h reproducing the exact group mean degrees.
  auto residual = [&](std::array<double, 2> x) -> std::array<double, 2> {
    const double ti = std::exp(x[0]), tu = std::exp(x[1]);
    return {ti * ti * (ni - 1.0) + ti * tu * nu - g.degree_infected,
            tu * tu * (nu - 1.0) + ti * tu * ni - g.degree_uninfected};
  };
  Newton2Options opts;
  opts.lo = {-40.0, -40.0};
  opts.hi = {0.0, 0.0};  // theta in (0, 1]
  const double t0i = std::sqrt(g.degree_infected / (N - 1.0));
  const double t0u = std::sqrt(g.degree_uninfected / (N - 1.0));
  const auto sol = newton2(residual, {std::log(t0i), std::log(t0u)}, opts);
  if (!sol) {
    throw std::invalid_argument(
        "no activity model matches the degree targets (mean degree too close to N?)");
  }
  const double theta_i = std::exp((*sol)[0]);
  const double theta_u = std::exp((*sol)[1]);

  BlockProbabilities blocks;
  blocks.degree_infected = g.degree_infected;
  blocks.degree_uninfected = g.degree_uninfected;
  // Cross ties reduced by the homophily factor, within-group probabilities
  // adjusted to preserve the group mean degrees exactly.
  blocks.p_iu = theta_i * theta_u / alpha_h;
  blocks.p_ii = (g.degree_infected - blocks.p_iu * nu) / (ni - 1.0);
  blocks.p_uu = (g.degree_uninfected - blocks.p_iu * ni) / (nu - 1.0);
  blocks.cross_ties = blocks.p_iu * ni * nu;

  auto check = [](double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument(std::string("block ") + name + " probability " +
                                  std::to_string(p) + " outside (0, 1)");
    }
  };
  check(blocks.p_ii, "infected-infected");
  check(blocks.p_iu, "infected-uninfected");
  check(blocks.p_uu, "uninfected-uninfected");
  return blocks;
}

SizedPopulation Network::degrees() const {
  SizedPopulation pop;
  pop.sizes.reserve(size());
  for (int i = 0; i < size(); ++i) pop.sizes.push_back(degree(i));
  pop.trait = infected;
  return pop;
}

Network generate_network(int N, double prevalence, double mean_degree, double omega,
                         double alpha_h, Rng& rng) {
  const BlockProbabilities blocks =
      block_probabilities(N, prevalence, mean_degree, omega, alpha_h);
  const int n_inf = static_cast<int>(std::lround(prevalence * N));

  Network net;
  net.adjacency.resize(N);
  net.infected.assign(N, 0);
  for (int i = 0; i < n_inf; ++i) net.infected[i] = 1;

  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double p = net.infected[i]
                           ? (net.infected[j] ? blocks.p_ii : blocks.p_iu)
                           : (net.infected[j] ? blocks.p_iu : blocks.p_uu);
      if (rng.u01() < p) {
        net.adjacency[i].push_back(j);
        net.adjacency[j].push_back(i);
      }
    }
  }
  return net;
}

RdsSample simulate_rds(const Network& network, int n, int num_seeds, int coupons,
                       Rng& rng) {
  const int N = network.size();
  if (n < 1 || n > N) throw std::invalid_argument("sample size outside 1..N");

  RdsSample out;
  std::vector<char> sampled(N, 0);
  std::vector<int> wave(N, 0);
  std::deque<int> queue;

  // Seeds: sequential PPS-by-degree without replacement.
  std::vector<double> weights(N);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    weights[i] = network.degree(i);
    total += weights[i];
  }
  for (int s = 0; s < num_seeds && static_cast<int>(out.nodes.size()) < n; ++s) {
    if (total <= 0.0) break;
    const int seed = weighted_pick(weights, total, rng);
    total -= weights[seed];
    weights[seed] = 0.0;
    sampled[seed] = 1;
    wave[seed] = 0;
    out.nodes.push_back(seed);
    out.recruiters.push_back(-1);
    queue.push_back(seed);
  }

  // Wave-by-wave recruitment, `coupons` uniform picks among unsampled alters.
  std::vector<int> candidates;
  while (!queue.empty() && static_cast<int>(out.nodes.size()) < n) {
    const int recruiter = queue.front();
    queue.pop_front();
    candidates.clear();
    for (const int alter : network.adjacency[recruiter]) {
      if (!sampled[alter]) candidates.push_back(alter);
    }
    const int picks = std::min<int>(coupons, static_cast<int>(candidates.size()));
    for (int c = 0; c < picks && static_cast<int>(out.nodes.size()) < n; ++c) {
      const int pick =
          rng.uniform_int(c, static_cast<int>(candidates.size()) - 1);
      std::swap(candidates[c], candidates[pick]);
      const int recruit = candidates[c];
      sampled[recruit] = 1;
      wave[recruit] = wave[recruiter] + 1;
      out.nodes.push_back(recruit);
      out.recruiters.push_back(recruiter);
      queue.push_back(recruit);
    }
  }

  out.truncated = static_cast<int>(out.nodes.size()) < n;
  for (const int node : out.nodes) {
    out.seq.unit_sizes.push_back(network.degree(node));
    out.seq.trait.push_back(network.infected[node]);
    out.waves = std::max(out.waves, wave[node]);
  }
  out.seq.truncated = out.truncated;
  return out;
}

SizedPopulation generate_model_population(const StudyDesign& design, Rng& rng) {
  const GroupSplit g = split_groups(design.population_size, design.prevalence,
                                    design.mean_degree, design.omega);
  SizedPopulation pop;
  pop.sizes.resize(design.population_size);
  pop.trait.assign(design.population_size, 0);
  if (design.omega == 1.0) {
    const auto model =
        UnitSizeModel::from_moments(design.fit_family, design.mean_degree, design.size_sd);
    for (auto& s : pop.sizes) s = model.sample(rng);
  } else {
    const auto infected_model = UnitSizeModel::from_moments(design.fit_family,
                                                            g.degree_infected,
                                                            design.size_sd);
    const auto uninfected_model = UnitSizeModel::from_moments(design.fit_family,
                                                              g.degree_uninfected,
                                                              design.size_sd);
    for (int i = 0; i < design.population_size; ++i) {
      pop.sizes[i] =
          i < g.n_infected ? infected_model.sample(rng) : uninfected_model.sample(rng);
    }
  }
  for (int i = 0; i < g.n_infected; ++i) pop.trait[i] = 1;
  return pop;
}

namespace {

ReplicateResult run_one_replicate(const StudyDesign& design, int rep) {
  ReplicateResult result;
  result.replicate = rep;
  result.truth = design.population_size;

  Rng gen_rng(Rng::mix_seed(design.master_seed, 4 * rep + 0));
  Rng sample_rng(Rng::mix_seed(design.master_seed, 4 * rep + 1));

  SizedPopulation pop;
  Network net;
  if (design.population == StudyDesign::Population::kBlockNetwork) {
    net = generate_network(design.population_size, design.prevalence, design.mean_degree,
                           design.omega, design.alpha_h, gen_rng);
    pop = net.degrees();
  } else {
    pop = generate_model_population(design, gen_rng);
  }

  ObservedSequence data;
  if (design.arm == StudyDesign::Arm::kRds) {
    if (design.population != StudyDesign::Population::kBlockNetwork) {
      throw std::invalid_argument("the RDS arm needs a network population");
    }
    const RdsSample rds = simulate_rds(net, design.sample_size, design.num_seeds,
                                       design.coupons, sample_rng);
    data = rds.seq;
    result.truncated = rds.truncated;
    result.waves = rds.waves;
  } else {
    const auto order = ppswor_draw(pop, design.sample_size, sample_rng);
    for (const int idx : order) {
      data.unit_sizes.push_back(pop.sizes[idx]);
      if (!pop.trait.empty()) data.trait.push_back(pop.trait[idx]);
    }
  }
  result.n_observed = data.n();

  const SizePrior prior = design.prior.build(data.n());
  McmcConfig config = design.mcmc;
  config.seed = Rng::mix_seed(design.master_seed, 4 * rep + 2);
  config.threads = 1;  // replicates are already parallel
  const auto draws = run_unknown_N(data, prior,
                                   MhEtaSpec{design.fit_family, design.eta_prior}, config);

  const auto s = summarize(draws.N, design.hpd_level);
  result.posterior_mean = s.mean;
  result.ratio = s.mean / design.population_size;
  result.hpd_lo = s.hpd_lo;
  result.hpd_hi = s.hpd_hi;
  result.covered = s.hpd_lo <= design.population_size && design.population_size <= s.hpd_hi;
  result.upper_ratio = static_cast<double>(s.hpd_hi) / design.population_size;
  result.eta_acceptance = draws.eta_acceptance.empty() ? 0.0 : draws.eta_acceptance[0];

  if (design.estimate_prevalence && data.has_trait()) {
    double tp = 0.0;
    for (const auto t : pop.trait) tp += t;
    result.true_prevalence = tp / pop.size();
    double raw = 0.0;
    for (const auto t : data.trait) raw += t;
    result.prev_raw = raw / data.n();

    const auto fitted = UnitSizeModel::from_moments(design.fit_family, draws.mean_mu(),
                                                    draws.mean_sigma());
    const std::uint64_t prev_seed = Rng::mix_seed(design.master_seed, 4 * rep + 3);
    const int n_post = std::max(data.n(), static_cast<int>(std::lround(s.mean)));
    result.prev_ss_posterior_mean_n =
        ss_prevalence_plugin(data, fitted, n_post, design.prevalence_sims, prev_seed);
    const int n_prior = std::max(data.n(), static_cast<int>(std::lround(prior.mean())));
    result.prev_ss_prior_mean_n =
        ss_prevalence_plugin(data, fitted, n_prior, design.prevalence_sims, prev_seed);
    result.prev_ss_true_n = ss_prevalence_plugin(data, fitted, design.population_size,
                                                 design.prevalence_sims, prev_seed);
  }

  result.ok = true;
  return result;
}

}  // namespace

StudyReport run_replication_study(const StudyDesign& design) {
  design.validate();

  StudyReport report;
  if (design.alpha_h < 1.0) {
    report.notes.push_back("alpha_h < 1 models heterophily; outside the reference grid");
  }
  report.replicates.resize(design.replicates);
  parallel_for(design.replicates, design.threads, [&](int rep) {
    try {
      report.replicates[rep] = run_one_replicate(design, rep);
    } catch (const std::exception& e) {
      report.replicates[rep].replicate = rep;
      report.replicates[rep].ok = false;
      report.replicates[rep].error = e.what();
    }
  });

  StudyAggregates agg;
  std::vector<double> ratios, upper_ratios;
  double covered = 0.0, covered_full = 0.0;
  int full = 0;
  for (const auto& r : report.replicates) {
    if (!r.ok) {
      ++agg.failures;
      continue;
    }
    ++agg.completed;
    if (r.truncated) ++agg.truncated;
    ratios.push_back(r.ratio);
    upper_ratios.push_back(r.upper_ratio);
    covered += r.covered ? 1.0 : 0.0;
    if (!r.truncated) {
      ++full;
      covered_full += r.covered ? 1.0 : 0.0;
    }
  }
  if (agg.completed > 0) {
    agg.mean_ratio = std::accumulate(ratios.begin(), ratios.end(), 0.0) / agg.completed;
    agg.coverage = covered / agg.completed;
    agg.coverage_full_only = full > 0 ? covered_full / full : 0.0;
    std::sort(upper_ratios.begin(), upper_ratios.end());
    agg.median_upper_ratio = upper_ratios[upper_ratios.size() / 2];
  }
  report.aggregates = agg;
  return report;
}

}  // namespace sspop
