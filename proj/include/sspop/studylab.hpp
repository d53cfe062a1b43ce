#ifndef SSPOP_STUDYLAB_HPP
#define SSPOP_STUDYLAB_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sspop/data.hpp"
#include "sspop/engine.hpp"
#include "sspop/priors.hpp"
#include "sspop/rng.hpp"
#include "sspop/size_dist.hpp"

namespace sspop {

// Frequentist verification harness: two-group dyad-independent network
// generation matched to (mean degree, prevalence, differential activity,
// homophily), coupon-based RDS simulation, a PPSWOR control arm, and a
// replication driver reporting coverage and ratio statistics.

// Prior choice for a study fit. Targets are absolute; the runner resolves
// elicitation targets against the design's sample size.
struct PriorSpec {
  SizePriorKind kind = SizePriorKind::kBetaProportion;
  double alpha = 1.0;
  double beta = 0.0;  // used when > 0 and no elicitation target set
  std::optional<double> mode;
  std::optional<double> median;
  std::optional<double> mean;
  std::optional<double> lower_quartile;
  int l = 1;       // factorial prior parameter
  int n_max = 0;   // 0 = default rule

  SizePrior build(int n) const;
};

struct StudyDesign {
  enum class Population { kBlockNetwork, kModelSizes };
  enum class Arm { kRds, kPpswor };

  int population_size = 300;
  double prevalence = 0.2;
  double mean_degree = 7.0;
  double size_sd = 3.0;           // within-group sd for model-sized populations
  double omega = 1.0;             // infected/uninfected mean degree ratio
  double alpha_h = 1.0;           // homophily (>= 1 typical; < 1 flagged)
  int sample_size = 150;
  int num_seeds = 10;
  int coupons = 2;
  int replicates = 20;
  Population population = Population::kModelSizes;
  Arm arm = Arm::kPpswor;
  SizeFamily fit_family = SizeFamily::kCmp;
  PriorSpec prior;
  EtaPrior eta_prior;
  McmcConfig mcmc;
  std::uint64_t master_seed = 1;
  int threads = 1;
  bool estimate_prevalence = false;
  int prevalence_sims = 4000;
  double hpd_level = 0.95;

  void validate() const;
};

// Bernoulli probabilities of the three mixing blocks, solved so the expected
// group mean degrees hit the (mean_degree, omega) targets exactly and the
// expected cross-group tie count equals the no-homophily count / alpha_h.
struct BlockProbabilities {
  double p_ii = 0.0;
  double p_iu = 0.0;
  double p_uu = 0.0;
  double degree_infected = 0.0;    // target group mean degrees
  double degree_uninfected = 0.0;
  double cross_ties = 0.0;         // expected M_IU after homophily
};

BlockProbabilities block_probabilities(int N, double prevalence, double mean_degree,
                                       double omega, double alpha_h);

struct Network {
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists
  std::vector<std::uint8_t> infected;

  int size() const { return static_cast<int>(adjacency.size()); }
  int degree(int node) const { return static_cast<int>(adjacency[node].size()); }
  SizedPopulation degrees() const;
};

Network generate_network(int N, double prevalence, double mean_degree, double omega,
                         double alpha_h, Rng& rng);

struct RdsSample {
  ObservedSequence seq;
  std::vector<int> nodes;       // sampled node ids in recruitment order
  std::vector<int> recruiters;  // recruiting node per respondent; -1 for seeds
  bool truncated = false;       // recruitment died out before the target n
  int waves = 0;
};

// Coupon-based RDS: seeds drawn PPS-by-degree without replacement, then
// wave-by-wave recruitment of up to `coupons` uniform picks among each
// respondent's not-yet-sampled neighbors, stopping at n.
RdsSample simulate_rds(const Network& network, int n, int num_seeds, int coupons,
                       Rng& rng);

// Two-group population of model sizes matched to (mean_degree, omega).
SizedPopulation generate_model_population(const StudyDesign& design, Rng& rng);

struct ReplicateResult {
  int replicate = 0;
  bool ok = false;
  bool truncated = false;
  int waves = 0;
  int n_observed = 0;
  int truth = 0;
  double posterior_mean = 0.0;
  double ratio = 0.0;  // posterior mean / truth
  int hpd_lo = 0;
  int hpd_hi = 0;
  bool covered = false;
  double upper_ratio = 0.0;  // HPD upper bound / truth
  double eta_acceptance = 0.0;
  // prevalence columns (when enabled)
  double true_prevalence = 0.0;
  double prev_raw = 0.0;
  double prev_ss_posterior_mean_n = 0.0;
  double prev_ss_prior_mean_n = 0.0;
  double prev_ss_true_n = 0.0;
  std::string error;
};

struct StudyAggregates {
  int completed = 0;
  int failures = 0;
  int truncated = 0;
  double mean_ratio = 0.0;
  double coverage = 0.0;            // all completed replicates
  double coverage_full_only = 0.0;  // excluding truncated recruitment
  double median_upper_ratio = 0.0;
};

struct StudyReport {
  std::vector<ReplicateResult> replicates;
  StudyAggregates aggregates;
  std::vector<std::string> notes;  // design caveats, e.g. alpha_h < 1
};

// R independent replicates of generate -> sample -> fit -> summarize.
// Deterministic given (design, master_seed) for any thread count.
StudyReport run_replication_study(const StudyDesign& design);

}  // namespace sspop

#endif
