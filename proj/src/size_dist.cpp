#include "sspop/size_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sspop/errors.hpp"
#include "sspop/numeric.hpp"

namespace sspop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long kMaxSeriesTerms = 2'000'000;
constexpr double kTailMass = 1e-10;  // support cap keeps all but this mass

// Bounds of the natural-parameter search boxes; proposals outside are
// reported as infeasible rather than silently clamped.
constexpr double kCmpLogLambdaMax = 690.0;
constexpr double kCmpNuMin = 1e-4;
constexpr double kCmpNuMax = 400.0;

// Unnormalized log mass at j >= 1 (constants in j dropped).
double log_term(SizeFamily family, const std::vector<double>& natural, int j) {
  switch (family) {
    case SizeFamily::kCmp:
      return j * std::log(natural[0]) - natural[1] * log_factorial(j);
    case SizeFamily::kZeroTruncPoisson:
      return j * std::log(natural[0]) - log_factorial(j);
    case SizeFamily::kZeroTruncNegBinomial: {
      const double r = natural[0];
      const double p = natural[1];
      return std::lgamma(j + r) - log_factorial(j) + j * std::log(p);
    }
  }
  return kNegInf;
}

// Accumulates log terms from j = 1 until the remaining tail is negligible
// (or exactly up to cap_override / at least min_terms when requested).
std::vector<double> scan_series(SizeFamily family, const std::vector<double>& natural,
                                int cap_override, int min_terms) {
  std::vector<double> log_terms{kNegInf};  // index 0: no mass
  const long hard_cap = cap_override > 0 ? cap_override : kMaxSeriesTerms;
  double peak = kNegInf;
  for (long j = 1; j <= hard_cap; ++j) {
    const double l = log_term(family, natural, static_cast<int>(j));
    log_terms.push_back(l);
    peak = std::max(peak, l);
    if (cap_override > 0) continue;
    if (j < std::max(8, min_terms)) continue;
    // Past the peak and decaying: bound the remaining tail geometrically.
    const double prev = log_terms[j - 1];
    if (l < prev && l < peak - 40.0) {
      const double ratio = std::exp(l - prev);
      if (ratio < 0.999) {
        const double tail_bound = std::exp(l - peak) * ratio / (1.0 - ratio);
        if (tail_bound < 1e-16) break;
      }
    }
  }
  if (cap_override == 0 && static_cast<long>(log_terms.size()) > kMaxSeriesTerms) {
    throw FeasibilityError("unit size PMF series did not converge within " +
                           std::to_string(kMaxSeriesTerms) + " terms");
  }
  return log_terms;
}

struct SeriesMoments {
  double mean;
  double sd;
};

SeriesMoments series_moments(const std::vector<double>& log_terms) {
  const double lz = log_sum_exp(std::span(log_terms.data() + 1, log_terms.size() - 1));
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 1; j < log_terms.size(); ++j) {
    const double p = std::exp(log_terms[j] - lz);
    m1 += j * p;
    m2 += static_cast<double>(j) * j * p;
  }
  const double var = std::max(0.0, m2 - m1 * m1);
  return {m1, std::sqrt(var)};
}

SeriesMoments moments_at(SizeFamily family, const std::vector<double>& natural) {
  return series_moments(scan_series(family, natural, 0, 0));
}

// Zero-truncated Poisson mean over the full support, lambda > 0.
double ztp_mean(double lambda) { return lambda / (-std::expm1(-lambda)); }

double solve_ztp_lambda(double mean) {
  // ztp mean is increasing in lambda, from 1 (lambda -> 0) upward.
  return std::exp(bisect_root(
      [&](double log_lambda) { return ztp_mean(std::exp(log_lambda)) - mean; }, -40.0,
      std::log(std::max(mean * 2.0, 4.0)), 1e-14));
}

std::vector<double> solve_cmp(double mean, double sd) {
  const double nu0 = std::clamp((mean + 0.5) / (sd * sd), 1e-2, 200.0);
  const double mode0 = std::max(mean + (nu0 - 1.0) / (2.0 * nu0), 1.05);
  const double log_lambda0 = std::clamp(nu0 * std::log(mode0), -600.0, 600.0);
  Newton2Options opts;
  opts.lo = {-kCmpLogLambdaMax, std::log(kCmpNuMin)};
  opts.hi = {kCmpLogLambdaMax, std::log(kCmpNuMax)};
  auto residual = [&](std::array<double, 2> x) -> std::array<double, 2> {
    const std::vector<double> nat{std::exp(x[0]), std::exp(x[1])};
    try {
      const SeriesMoments m = moments_at(SizeFamily::kCmp, nat);
      return {m.mean - mean, m.sd - sd};
    } catch (const FeasibilityError&) {
      return {std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
    }
  };
  const auto sol = newton2(residual, {log_lambda0, std::log(nu0)}, opts);
  if (!sol) {
    // Estimate the attainable sd range at this mean for the error message.
    std::string range = "unknown";
    try {
      auto sd_with_nu_fixed = [&](double nu) {
        const double ll = bisect_root(
            [&](double log_lambda) {
              return moments_at(SizeFamily::kCmp, {std::exp(log_lambda), nu}).mean - mean;
            },
            -kCmpLogLambdaMax, kCmpLogLambdaMax, 1e-10);
        return moments_at(SizeFamily::kCmp, {std::exp(ll), nu}).sd;
      };
      range = "[" + std::to_string(sd_with_nu_fixed(kCmpNuMax)) + ", " +
              std::to_string(sd_with_nu_fixed(kCmpNuMin)) + "]";
    } catch (const std::exception&) {
    }
    throw FeasibilityError("infeasible CMP moments: mean=" + std::to_string(mean) +
                           ", sd=" + std::to_string(sd) +
                           "; attainable sd at this mean with nu in [" +
                           std::to_string(kCmpNuMin) + ", " + std::to_string(kCmpNuMax) +
                           "] is approximately " + range);
  }
  return {std::exp((*sol)[0]), std::exp((*sol)[1])};
}

std::vector<double> solve_ztnb(double mean, double sd) {
  // The family needs over-dispersion relative to the truncated Poisson limit.
  const double lambda = solve_ztp_lambda(mean);
  const double sd_floor = moments_at(SizeFamily::kZeroTruncPoisson, {lambda}).sd;
  if (sd <= sd_floor * (1.0 + 1e-9)) {
    throw FeasibilityError(
        "infeasible zero-truncated negative binomial moments: sd=" + std::to_string(sd) +
        " must exceed the truncated-Poisson sd " + std::to_string(sd_floor) +
        " at mean=" + std::to_string(mean));
  }
  const double var = sd * sd;
  const double p0 = std::clamp(1.0 - mean / var, 1e-4, 1.0 - 1e-4);
  const double r0 = std::clamp(mean * (1.0 - p0) / p0, 1e-3, 1e5);
  Newton2Options opts;
  opts.lo = {std::log(1e-5), -30.0};
  opts.hi = {std::log(1e7), 25.0};
  auto residual = [&](std::array<double, 2> x) -> std::array<double, 2> {
    const double r = std::exp(x[0]);
    const double p = 1.0 / (1.0 + std::exp(-x[1]));
    try {
      const SeriesMoments m = moments_at(SizeFamily::kZeroTruncNegBinomial, {r, p});
      return {m.mean - mean, m.sd - sd};
    } catch (const FeasibilityError&) {
      return {std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
    }
  };
  const auto sol =
      newton2(residual, {std::log(r0), std::log(p0) - std::log1p(-p0)}, opts);
  if (!sol) {
    throw FeasibilityError(
        "infeasible zero-truncated negative binomial moments: mean=" +
        std::to_string(mean) + ", sd=" + std::to_string(sd));
  }
  return {std::exp((*sol)[0]), 1.0 / (1.0 + std::exp(-(*sol)[1]))};
}

}  // namespace

std::string family_name(SizeFamily family) {
  switch (family) {
    case SizeFamily::kCmp:
      return "cmp";
    case SizeFamily::kZeroTruncPoisson:
      return "ztpoisson";
    case SizeFamily::kZeroTruncNegBinomial:
      return "ztnegbinomial";
  }
  return "?";
}

SizeFamily family_from_name(const std::string& name) {
  if (name == "cmp") return SizeFamily::kCmp;
  if (name == "ztpoisson") return SizeFamily::kZeroTruncPoisson;
  if (name == "ztnegbinomial") return SizeFamily::kZeroTruncNegBinomial;
  throw std::invalid_argument("unknown unit size family: " + name);
}

std::vector<double> solve_natural_params(SizeFamily family, double mean, double sd) {
  if (!(mean > 1.0)) {
    throw FeasibilityError("zero-truncated unit size mean must exceed 1, got " +
                           std::to_string(mean));
  }
  if (mean > 1e6) {
    throw FeasibilityError("unit size mean too large for tabulated support: " +
                           std::to_string(mean));
  }
  if (family != SizeFamily::kZeroTruncPoisson && !(sd > 0.0)) {
    throw FeasibilityError("unit size sd must be positive, got " + std::to_string(sd));
  }
  switch (family) {
    case SizeFamily::kZeroTruncPoisson:
      return {solve_ztp_lambda(mean)};
    case SizeFamily::kCmp:
      return solve_cmp(mean, sd);
    case SizeFamily::kZeroTruncNegBinomial:
      return solve_ztnb(mean, sd);
  }
  throw std::logic_error("unreachable");
}

UnitSizeModel UnitSizeModel::from_moments(SizeFamily family, double mean, double sd,
                                          int support_floor) {
  return from_natural(family, solve_natural_params(family, mean, sd), support_floor);
}

UnitSizeModel UnitSizeModel::from_natural(SizeFamily family, std::vector<double> natural,
                                          int support_floor, int support_cap_override) {
  for (const double v : natural) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw FeasibilityError("natural parameters must be positive finite for " +
                             family_name(family));
    }
  }
  if (family == SizeFamily::kZeroTruncNegBinomial && natural.size() == 2 &&
      natural[1] >= 1.0) {
    throw FeasibilityError("negative binomial probability parameter must be in (0,1)");
  }

  const std::vector<double> log_terms =
      scan_series(family, natural, support_cap_override, support_floor);
  const std::size_t scanned = log_terms.size() - 1;

  int cap;
  if (support_cap_override > 0) {
    cap = support_cap_override;
  } else {
    // Smallest j holding all but kTailMass of the scanned series, floored by
    // the caller's bound (3x the largest observed size in the engine).
    const double lz = log_sum_exp(std::span(log_terms.data() + 1, scanned));
    double cum = 0.0;
    cap = static_cast<int>(scanned);
    for (std::size_t j = 1; j <= scanned; ++j) {
      cum += std::exp(log_terms[j] - lz);
      if (cum >= 1.0 - kTailMass) {
        cap = static_cast<int>(j);
        break;
      }
    }
    cap = std::max(cap, support_floor);
    cap = std::min<int>(cap, static_cast<int>(scanned));
  }

  UnitSizeModel model;
  model.family_ = family;
  model.natural_ = std::move(natural);
  model.log_pmf_.assign(cap + 1, kNegInf);
  model.pmf_.assign(cap + 1, 0.0);
  model.cdf_.assign(cap + 1, 0.0);

  const double lz = log_sum_exp(std::span(log_terms.data() + 1, static_cast<std::size_t>(cap)));
  double cum = 0.0;
  double m1 = 0.0, m2 = 0.0;
  for (int j = 1; j <= cap; ++j) {
    const double lp = log_terms[j] - lz;
    const double p = std::exp(lp);
    model.log_pmf_[j] = lp;
    model.pmf_[j] = p;
    cum += p;
    model.cdf_[j] = cum;
    m1 += j * p;
    m2 += static_cast<double>(j) * j * p;
  }
  model.mean_ = m1;
  model.sd_ = std::sqrt(std::max(0.0, m2 - m1 * m1));
  return model;
}

double UnitSizeModel::pmf(int j) const {
  if (j < 1) throw std::domain_error("unit size must be a positive integer");
  if (j > support_cap()) return 0.0;
  return pmf_[j];
}

double UnitSizeModel::log_pmf(int j) const {
  if (j < 1) throw std::domain_error("unit size must be a positive integer");
  if (j > support_cap()) return kNegInf;
  return log_pmf_[j];
}

int UnitSizeModel::sample(Rng& rng) const {
  const double u = rng.u01() * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin() + 1, cdf_.end(), u);
  if (it == cdf_.end()) return support_cap();
  return static_cast<int>(it - cdf_.begin());
}

int UnitSizeModel::tilted_sample(double tilt, Rng& rng, long max_attempts) const {
  if (tilt < 0.0) throw std::domain_error("tilt must be nonnegative");
  if (tilt == 0.0) return sample(rng);
  for (long attempt = 0; attempt < max_attempts; ++attempt) {
    const int j = sample(rng);
    if (std::log(rng.u01_pos()) < -tilt * j) return j;
  }
  throw ChainError("tilted rejection sampler exhausted " + std::to_string(max_attempts) +
                   " proposals at tilt " + std::to_string(tilt) +
                   "; chain state is degenerate");
}

double UnitSizeModel::gamma_tilt(double tilt) const {
  if (tilt < 0.0) throw std::domain_error("tilt must be nonnegative");
  if (tilt == 0.0) return 1.0;
  double s = 0.0;
  for (int j = support_cap(); j >= 1; --j) {
    s += pmf_[j] * std::exp(-tilt * j);
  }
  return std::min(s, 1.0);
}

}  // namespace sspop
