#ifndef SSPOP_PRIORS_HPP
#define SSPOP_PRIORS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sspop/rng.hpp"

namespace sspop {

enum class SizePriorKind {
  kFlat,
  kFactorial,        // pi(N) = (N-l)!/N!  (Jeffreys-like for l = 1)
  kBetaProportion,   // Beta(alpha, beta) on the sample proportion n/N
  kCustom            // tabulated masses (point masses, posterior-as-prior)
};

std::string size_prior_kind_name(SizePriorKind kind);

// Discrete prior over the population size N on the grid {n, ..., n_max}.
// Masses are normalized once at construction; the raw kind-specific density
// stays available for tail checks.
class SizePrior {
 public:
  static SizePrior flat(int n, int n_max);
  static SizePrior factorial(int n, int n_max, int l = 1);
  static SizePrior beta_proportion(int n, int n_max, double alpha, double beta);
  static SizePrior point_mass(int n, int value);
  static SizePrior from_log_masses(int n, std::vector<double> log_masses);

  // Unnormalized log density of the selected kind; -infinity off the grid.
  double log_density(int N) const;
  // Normalized log mass on the grid; -infinity off the grid.
  double log_mass(int N) const;
  double mass(int N) const;
  std::span<const double> masses() const { return masses_; }

  int n() const { return n_; }
  int n_max() const { return n_max_; }
  SizePriorKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  int l() const { return l_; }

  int mode() const;    // smallest maximizer
  int median() const;  // smallest N with cdf >= 1/2
  double mean() const;
  int sample(Rng& rng) const;

 private:
  SizePrior(SizePriorKind kind, int n, int n_max);
  // Fills masses_ from log densities in two streaming passes (max, then
  // compensated sum) so large grids need a single vector.
  void normalize_from_log_fn(const std::function<double(int)>& log_density_at);

  SizePriorKind kind_;
  int n_;
  int n_max_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  int l_ = 1;
  std::vector<double> masses_;  // index 0 -> N = n
};

// Default grid upper bound: large enough that the prior tail beyond holds
// less than 1e-6 mass, at least 20x the sample size, capped so the grid
// stays tractable for the N step.
int default_n_max(SizePriorKind kind, int n, double alpha = 0.0, double beta = 0.0,
                  int l = 1);

// Elicitation targets for the Beta-on-sample-proportion prior. Exactly one of
// {mode, median, mean+lower_quartile} must be set. mode/median use the
// alpha = 1 closed forms; the mean/quartile pair is solved numerically.
struct BetaElicitation {
  std::optional<double> mode;
  std::optional<double> median;
  std::optional<double> mean;
  std::optional<double> lower_quartile;
  double alpha = 1.0;  // used by the mode/median closed forms
};

// Returns (alpha, beta). Throws ElicitationError for targets at or below the
// sample size or otherwise unattainable.
std::pair<double, double> beta_from_elicitation(int n, const BetaElicitation& target);

// Calibrates beta so the discretized prior on {n..n_max} has the requested
// mean. The alpha = 1 subfamily has no finite continuous mean, so mean
// targets are defined against the truncated grid the fit actually uses.
double beta_from_grid_mean(int n, int n_max, double alpha, double target_mean);

// Prior for the unit size model's (mean, sd): mean | sd is normal with
// variance sd^2/df_mean (df_mean an equivalent sample size) and sd follows a
// scaled inverse-chi distribution with scale sigma0 and df_sigma degrees of
// freedom. Densities include normalizing constants.
struct EtaPrior {
  double mu0 = 7.0;
  double df_mean = 1.0;
  double sigma0 = 3.0;
  double df_sigma = 5.0;

  double log_density(double mu, double sigma) const;
  std::pair<double, double> sample(Rng& rng) const;  // (mu, sigma)
};

}  // namespace sspop

#endif
