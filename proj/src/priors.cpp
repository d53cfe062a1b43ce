#include "sspop/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sspop/errors.hpp"
#include "sspop/numeric.hpp"

namespace sspop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long kMaxGridPoints = 30'000'000;

// Continuous Beta-proportion density kernel on N:
// beta * n * (N-n)^(beta-1) / N^(alpha+beta).
double beta_prop_log_density(double N, int n, double alpha, double beta) {
  if (N < n) return kNegInf;
  if (N == n) {
    if (beta == 1.0) return std::log(beta) + std::log(n) - (alpha + beta) * std::log(N);
    return kNegInf;  // beta > 1: zero; beta < 1: handled by cell integration
  }
  return std::log(beta) + std::log(static_cast<double>(n)) +
         (beta - 1.0) * std::log(N - n) - (alpha + beta) * std::log(N);
}

// Integrated mass of the divergent boundary cell [n, n+1) for beta < 1;
// the substitution t = (x-n)^beta removes the singularity and absorbs the
// beta * (x-n)^(beta-1) factor.
double beta_prop_boundary_cell(int n, double alpha, double beta) {
  static const QuadratureRule rule = gauss_legendre_01(32);
  double integral = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = n + std::pow(rule.nodes[i], 1.0 / beta);
    integral += rule.weights[i] * n / std::pow(x, alpha + beta);
  }
  return integral;
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

std::string size_prior_kind_name(SizePriorKind kind) {
  switch (kind) {
    case SizePriorKind::kFlat:
      return "flat";
    case SizePriorKind::kFactorial:
      return "factorial";
    case SizePriorKind::kBetaProportion:
      return "beta";
    case SizePriorKind::kCustom:
      return "custom";
  }
  return "?";
}

SizePrior::SizePrior(SizePriorKind kind, int n, int n_max)
    : kind_(kind), n_(n), n_max_(n_max) {
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  if (n_max < n) throw std::invalid_argument("prior grid upper bound below sample size");
  if (static_cast<long>(n_max) - n + 1 > kMaxGridPoints) {
    throw std::invalid_argument("prior grid has more than " +
                                std::to_string(kMaxGridPoints) + " points");
  }
}

void SizePrior::normalize_from_log_fn(const std::function<double(int)>& log_density_at) {
  const int count = n_max_ - n_ + 1;
  double peak = kNegInf;
  for (int i = 0; i < count; ++i) peak = std::max(peak, log_density_at(n_ + i));
  if (!std::isfinite(peak)) {
    throw std::invalid_argument("prior has no finite mass on grid");
  }
  masses_.resize(count);
  KahanSum total;
  for (int i = 0; i < count; ++i) {
    masses_[i] = std::exp(log_density_at(n_ + i) - peak);
    total.add(masses_[i]);
  }
  KahanSum check;
  for (int i = 0; i < count; ++i) {
    masses_[i] /= total.sum;
    check.add(masses_[i]);
  }
  // One compensated correction pass keeps the grid sum within 1e-10 even for
  // tens of millions of cells.
  const double residual = check.sum - 1.0;
  if (residual != 0.0) {
    const auto it = std::max_element(masses_.begin(), masses_.end());
    *it -= residual;
  }
}

SizePrior SizePrior::flat(int n, int n_max) {
  SizePrior prior(SizePriorKind::kFlat, n, n_max);
  prior.normalize_from_log_fn([](int) { return 0.0; });
  return prior;
}

SizePrior SizePrior::factorial(int n, int n_max, int l) {
  if (l < 1) throw std::invalid_argument("factorial prior needs l >= 1");
  SizePrior prior(SizePriorKind::kFactorial, n, n_max);
  prior.l_ = l;
  prior.normalize_from_log_fn([l](int N) {
    return N - l >= 0 ? std::lgamma(N - l + 1.0) - std::lgamma(N + 1.0) : kNegInf;
  });
  return prior;
}

SizePrior SizePrior::beta_proportion(int n, int n_max, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("beta prior parameters must be positive");
  }
  SizePrior prior(SizePriorKind::kBetaProportion, n, n_max);
  prior.alpha_ = alpha;
  prior.beta_ = beta;
  const double boundary =
      beta < 1.0 ? std::log(beta_prop_boundary_cell(n, alpha, beta)) : kNegInf;
  prior.normalize_from_log_fn([=](int N) {
    if (N == n && beta < 1.0) return boundary;
    return beta_prop_log_density(N, n, alpha, beta);
  });
  return prior;
}

SizePrior SizePrior::point_mass(int n, int value) {
  if (value < n) throw std::invalid_argument("point mass below sample size");
  SizePrior prior(SizePriorKind::kCustom, n, value);
  prior.normalize_from_log_fn([value](int N) { return N == value ? 0.0 : kNegInf; });
  return prior;
}

SizePrior SizePrior::from_log_masses(int n, std::vector<double> log_masses) {
  if (log_masses.empty()) throw std::invalid_argument("empty prior table");
  SizePrior prior(SizePriorKind::kCustom, n, n + static_cast<int>(log_masses.size()) - 1);
  prior.normalize_from_log_fn([&](int N) { return log_masses[N - n]; });
  return prior;
}

double SizePrior::log_density(int N) const {
  if (N < n_ || N > n_max_) return kNegInf;
  switch (kind_) {
    case SizePriorKind::kFlat:
      return 0.0;
    case SizePriorKind::kFactorial:
      return N - l_ >= 0 ? std::lgamma(N - l_ + 1.0) - std::lgamma(N + 1.0) : kNegInf;
    case SizePriorKind::kBetaProportion:
      return beta_prop_log_density(N, n_, alpha_, beta_);
    case SizePriorKind::kCustom:
      return log_mass(N);
  }
  return kNegInf;
}

double SizePrior::log_mass(int N) const {
  if (N < n_ || N > n_max_) return kNegInf;
  return std::log(masses_[N - n_]);
}

double SizePrior::mass(int N) const {
  if (N < n_ || N > n_max_) return 0.0;
  return masses_[N - n_];
}

int SizePrior::mode() const {
  const auto it = std::max_element(masses_.begin(), masses_.end());
  return n_ + static_cast<int>(it - masses_.begin());
}

int SizePrior::median() const {
  KahanSum cum;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    cum.add(masses_[i]);
    if (cum.sum >= 0.5) return n_ + static_cast<int>(i);
  }
  return n_max_;
}

double SizePrior::mean() const {
  KahanSum m;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    m.add((n_ + static_cast<double>(i)) * masses_[i]);
  }
  return m.sum;
}

int SizePrior::sample(Rng& rng) const {
  const double u = rng.u01();
  double cum = 0.0;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    cum += masses_[i];
    if (u < cum) return n_ + static_cast<int>(i);
  }
  return n_max_;
}

int default_n_max(SizePriorKind kind, int n, double alpha, double beta, int l) {
  const long floor = 20L * n;
  long target = floor;
  switch (kind) {
    case SizePriorKind::kBetaProportion: {
      // Continuous tail bound: mass beyond M is at most beta*n*M^-alpha/alpha.
      const double m = std::pow(beta * n / (alpha * 1e-6), 1.0 / alpha);
      target = std::max<long>(floor, static_cast<long>(std::min(m, 1e18)));
      break;
    }
    case SizePriorKind::kFactorial: {
      if (l >= 2) {
        const double m = n * std::pow(1e6, 1.0 / (l - 1));
        target = std::max<long>(floor, static_cast<long>(std::min(m, 1e18)));
      }
      break;  // l = 1 is 1/N: not normalizable, keep the floor
    }
    case SizePriorKind::kFlat:
    case SizePriorKind::kCustom:
      break;  // flat is improper; the floor is the rule
  }
  // Keep the N-step grid tractable; heavy tails would otherwise demand ~1e9
  // points. Overridable from the CLI.
  const long cap = static_cast<long>(n) + 100'000 - 1;
  return static_cast<int>(std::min(target, cap));
}

std::pair<double, double> beta_from_elicitation(int n, const BetaElicitation& target) {
  const int set_count = static_cast<int>(target.mode.has_value()) +
                        static_cast<int>(target.median.has_value()) +
                        static_cast<int>(target.mean.has_value());
  if (target.mean.has_value() != target.lower_quartile.has_value()) {
    throw ElicitationError("prior mean and lower quartile must be supplied together");
  }
  if (set_count != 1) {
    throw ElicitationError("specify exactly one of prior mode, median, or mean+quartile");
  }

  if (target.mode) {
    const double m = *target.mode;
    if (m <= n) {
      throw ElicitationError("prior mode target " + std::to_string(m) +
                             " must exceed the sample size " + std::to_string(n));
    }
    // mode = 0.5 n (beta + 1) for alpha = 1
    return {target.alpha, 2.0 * m / n - 1.0};
  }
  if (target.median) {
    const double m = *target.median;
    if (m <= n) {
      throw ElicitationError("prior median target " + std::to_string(m) +
                             " must exceed the sample size " + std::to_string(n));
    }
    // median = n / (1 - (1/2)^(1/beta)) for alpha = 1
    return {target.alpha, std::log(2.0) / -std::log1p(-static_cast<double>(n) / m)};
  }

  const double mean = *target.mean;
  const double q = *target.lower_quartile;
  if (mean <= n) throw ElicitationError("prior mean target must exceed the sample size");
  if (!(q > n && q < mean)) {
    throw ElicitationError("prior lower quartile must lie strictly between n and the mean");
  }
  // For given alpha > 1, matching the mean n(alpha+beta-1)/(alpha-1) pins
  // beta = (alpha-1)(mean-n)/n; the quartile condition P(N <= q) = 1/4 then
  // reads I_{n/q}(alpha, beta) = 3/4, monotone in alpha.
  auto quartile_gap = [&](double log_am1) {
    const double a = 1.0 + std::exp(log_am1);
    const double b = (a - 1.0) * (mean - n) / n;
    return incomplete_beta(a, b, static_cast<double>(n) / q) - 0.75;
  };
  const double lo = -24.0, hi = 14.0;
  if ((quartile_gap(lo) > 0.0) == (quartile_gap(hi) > 0.0)) {
    throw ElicitationError("no Beta prior matches the requested mean and lower quartile");
  }
  const double log_am1 = bisect_root(quartile_gap, lo, hi, 1e-12);
  const double a = 1.0 + std::exp(log_am1);
  const double b = (a - 1.0) * (mean - n) / n;
  if (std::abs(incomplete_beta(a, b, static_cast<double>(n) / q) - 0.75) > 1e-6) {
    throw ElicitationError("quartile elicitation failed to converge");
  }
  return {a, b};
}

double beta_from_grid_mean(int n, int n_max, double alpha, double target_mean) {
  if (!(target_mean > n && target_mean < n_max)) {
    throw ElicitationError("grid-mean target must lie strictly between n and n_max");
  }
  // The grid mean is strictly decreasing in beta (mass shifts toward n).
  auto gap = [&](double log_beta) {
    return SizePrior::beta_proportion(n, n_max, alpha, std::exp(log_beta)).mean() -
           target_mean;
  };
  const double lo = std::log(0.02), hi = std::log(5000.0);
  if ((gap(lo) > 0.0) == (gap(hi) > 0.0)) {
    throw ElicitationError("no beta matches the requested grid mean " +
                           std::to_string(target_mean));
  }
  return std::exp(bisect_root(gap, lo, hi, 1e-10));
}

double EtaPrior::log_density(double mu, double sigma) const {
  if (!(sigma > 0.0)) return kNegInf;
  const double nu = df_sigma;
  const double scale2 = nu * sigma0 * sigma0;
  // scaled inverse-chi on sigma (sigma^2 is scaled inverse-chi-squared)
  const double log_sigma_density = std::log(2.0) + 0.5 * nu * std::log(0.5 * scale2) -
                                   std::lgamma(0.5 * nu) - (nu + 1.0) * std::log(sigma) -
                                   0.5 * scale2 / (sigma * sigma);
  const double var_mu = sigma * sigma / df_mean;
  const double d = mu - mu0;
  const double log_mu_density =
      -0.5 * std::log(2.0 * M_PI * var_mu) - 0.5 * d * d / var_mu;
  return log_sigma_density + log_mu_density;
}

std::pair<double, double> EtaPrior::sample(Rng& rng) const {
  const double sigma = std::sqrt(df_sigma * sigma0 * sigma0 / rng.chi_squared(df_sigma));
  const double mu = mu0 + rng.normal() * sigma / std::sqrt(df_mean);
  return {mu, sigma};
}

}  // namespace sspop
