#ifndef SSPOP_NUMERIC_HPP
#define SSPOP_NUMERIC_HPP

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sspop {

double log_sum_exp(std::span<const double> values);

// log(j!) with a cached table for small arguments (hot path in PMF series).
double log_factorial(int j);

// Root of a continuous scalar function on [lo, hi] by bisection; requires a
// sign change. Tolerance is on the argument.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol = 1e-12, int max_iter = 200);

// Damped Newton iteration for a 2-d root with finite-difference Jacobian.
// Returns nullopt when it fails to converge or leaves the supplied box.
struct Newton2Options {
  double tol = 1e-8;          // on the residual max-norm
  int max_iter = 200;
  std::array<double, 2> lo{-1e30, -1e30};
  std::array<double, 2> hi{1e30, 1e30};
};
std::optional<std::array<double, 2>> newton2(
    const std::function<std::array<double, 2>(std::array<double, 2>)>& f,
    std::array<double, 2> x0, const Newton2Options& opts = {});

// Nodes and weights for n-point Gauss-Legendre quadrature on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre_01(int n);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace sspop

#endif
