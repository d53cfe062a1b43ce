#include "sspop/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace sspop {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

namespace {
constexpr int kLogFactorialTableSize = 1 << 16;
std::vector<double> g_log_factorial;
std::once_flag g_log_factorial_once;

void build_log_factorial_table() {
  g_log_factorial.resize(kLogFactorialTableSize);
  g_log_factorial[0] = 0.0;
  for (int j = 1; j < kLogFactorialTableSize; ++j) {
    g_log_factorial[j] = g_log_factorial[j - 1] + std::log(static_cast<double>(j));
  }
}
}  // namespace

double log_factorial(int j) {
  if (j < 0) throw std::domain_error("log_factorial: negative argument");
  std::call_once(g_log_factorial_once, build_log_factorial_table);
  if (j < kLogFactorialTableSize) return g_log_factorial[j];
  return std::lgamma(static_cast<double>(j) + 1.0);
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol, int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::invalid_argument("bisect_root: no sign change on bracket");
  }
  for (int it = 0; it < max_iter && hi - lo > x_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<std::array<double, 2>> newton2(
    const std::function<std::array<double, 2>(std::array<double, 2>)>& f,
    std::array<double, 2> x, const Newton2Options& opts) {
  auto clamp_to_box = [&](std::array<double, 2> p) {
    p[0] = std::clamp(p[0], opts.lo[0], opts.hi[0]);
    p[1] = std::clamp(p[1], opts.lo[1], opts.hi[1]);
    return p;
  };
  auto norm = [](const std::array<double, 2>& r) {
    return std::max(std::abs(r[0]), std::abs(r[1]));
  };

  x = clamp_to_box(x);
  std::array<double, 2> r = f(x);
  if (!std::isfinite(r[0]) || !std::isfinite(r[1])) return std::nullopt;

  for (int it = 0; it < opts.max_iter; ++it) {
    if (norm(r) < opts.tol) return x;

    // Forward-difference Jacobian.
    std::array<std::array<double, 2>, 2> jac{};
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
      std::array<double, 2> xh = x;
      xh[k] = std::min(x[k] + h, opts.hi[k]);
      const double hd = xh[k] - x[k];
      if (hd == 0.0) return std::nullopt;
      const std::array<double, 2> rh = f(xh);
      if (!std::isfinite(rh[0]) || !std::isfinite(rh[1])) return std::nullopt;
      jac[0][k] = (rh[0] - r[0]) / hd;
      jac[1][k] = (rh[1] - r[1]) / hd;
    }
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!std::isfinite(det) || std::abs(det) < 1e-300) return std::nullopt;
    std::array<double, 2> step{(-r[0] * jac[1][1] + r[1] * jac[0][1]) / det,
                               (-r[1] * jac[0][0] + r[0] * jac[1][0]) / det};

    // Halve the step until the residual improves.
    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const std::array<double, 2> cand =
          clamp_to_box({x[0] + scale * step[0], x[1] + scale * step[1]});
      const std::array<double, 2> rc = f(cand);
      if (std::isfinite(rc[0]) && std::isfinite(rc[1]) && norm(rc) < norm(r)) {
        x = cand;
        r = rc;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) return std::nullopt;
  }
  return norm(r) < opts.tol ? std::optional(x) : std::nullopt;
}

QuadratureRule gauss_legendre_01(int n) {
  QuadratureRule rule;
  // Zeros of P_n on (-1, 1) and the standard weight formula, mapped to [0, 1].
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> full;
  for (const double z : zeros) {
    full.push_back(z);
    if (z != 0.0) full.push_back(-z);
  }
  std::sort(full.begin(), full.end());
  for (const double z : full) {
    const double d = boost::math::legendre_p_prime(n, z);
    const double w = 2.0 / ((1.0 - z * z) * d * d);
    rule.nodes.push_back(0.5 * (z + 1.0));
    rule.weights.push_back(0.5 * w);
  }
  return rule;
}

double incomplete_beta(double a, double b, double x) {
  return boost::math::ibeta(a, b, x);
}

}  // namespace sspop
