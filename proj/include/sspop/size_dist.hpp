#ifndef SSPOP_SIZE_DIST_HPP
#define SSPOP_SIZE_DIST_HPP

#include <string>
#include <vector>

#include "sspop/rng.hpp"

namespace sspop {

// Parametric super-population families for unit sizes (degrees). Every family
// is zero-truncated: the support is {1, 2, ...} up to a computational cap.
enum class SizeFamily {
  kCmp,                  // Conway-Maxwell-Poisson, natural params (lambda, nu)
  kZeroTruncPoisson,     // natural param (lambda); sd is implied by the mean
  kZeroTruncNegBinomial  // natural params (r, p)
};

std::string family_name(SizeFamily family);
SizeFamily family_from_name(const std::string& name);

// Solve for the family's natural parameters so the realized zero-truncated
// moments match (mean, sd). For the one-parameter Poisson family only the
// mean is matched. Throws FeasibilityError naming the violated bound when
// the pair is unattainable.
std::vector<double> solve_natural_params(SizeFamily family, double mean, double sd);

// An immutable unit-size distribution with tabulated PMF over {1..support_cap}.
// Models are cheap to copy and safe to share across threads; all sampling
// goes through an explicit caller-owned Rng.
class UnitSizeModel {
 public:
  UnitSizeModel() = default;  // empty model; assign before use

  // Construct by mean/sd parameterization (solves natural params first).
  // support_floor, when positive, forces support_cap >= support_floor
  // (the engine passes 3x the largest observed size).
  static UnitSizeModel from_moments(SizeFamily family, double mean, double sd,
                                    int support_floor = 0);

  // Construct from natural parameters. support_cap_override, when positive,
  // truncates and renormalizes the PMF at exactly that cap.
  static UnitSizeModel from_natural(SizeFamily family, std::vector<double> natural,
                                    int support_floor = 0, int support_cap_override = 0);

  // Zero-truncated mass at j; 0 beyond the support cap. j < 1 is a domain error.
  double pmf(int j) const;
  double log_pmf(int j) const;  // -infinity outside the support

  // One draw from the PMF via inverse CDF.
  int sample(Rng& rng) const;

  // One draw proportional to exp(-j * tilt) * pmf(j), by rejection against
  // the plain PMF. Throws ChainError once max_attempts proposals are rejected.
  int tilted_sample(double tilt, Rng& rng, long max_attempts = 1'000'000) const;

  // gamma(tilt) = sum_j exp(-j * tilt) * pmf(j); equals 1 at tilt 0 and is
  // strictly decreasing. Also the acceptance rate of tilted_sample.
  double gamma_tilt(double tilt) const;

  SizeFamily family() const { return family_; }
  double mean() const { return mean_; }
  double sd() const { return sd_; }
  const std::vector<double>& natural_params() const { return natural_; }
  int support_cap() const { return static_cast<int>(pmf_.size()) - 1; }

 private:
  SizeFamily family_{};
  double mean_ = 0.0;
  double sd_ = 0.0;
  std::vector<double> natural_;
  std::vector<double> pmf_;      // index 0 unused (mass 0)
  std::vector<double> log_pmf_;  // -inf at 0
  std::vector<double> cdf_;      // cdf_[j] = sum_{i<=j} pmf_[i]
};

}  // namespace sspop

#endif
