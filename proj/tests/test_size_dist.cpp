#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sspop/errors.hpp"
#include "sspop/size_dist.hpp"
#include "test_util.hpp"

using namespace sspop;

namespace {

// Independent oracle: zero-truncated Poisson masses by direct series
// evaluation of exp(-lambda) lambda^j / j! renormalized over j >= 1.
std::vector<double> ztp_pmf_oracle(double lambda, int up_to) {
  std::vector<double> p(up_to + 1, 0.0);
  double term = std::exp(-lambda);  // j = 0
  std::vector<double> raw(up_to + 1, 0.0);
  for (int j = 1; j <= up_to; ++j) {
    term *= lambda / j;
    raw[j] = term;
  }
  // renormalize over the truncated support used by the check
  const double denom = -std::expm1(-lambda);  // 1 - e^-lambda
  for (int j = 1; j <= up_to; ++j) p[j] = raw[j] / denom;
  return p;
}

double ztp_mean_oracle(double lambda) { return lambda / (-std::expm1(-lambda)); }

}  // namespace

TEST_CASE("ztp pmf matches series oracle") {
  const auto model = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0});
  const auto oracle = ztp_pmf_oracle(1.0, 30);
  CHECK(model.pmf(1) == doctest::Approx(0.581977).epsilon(1e-5));
  CHECK(model.pmf(1) == doctest::Approx(oracle[1]).epsilon(1e-9));
  CHECK(model.pmf(2) == doctest::Approx(0.290989).epsilon(1e-5));
  for (int j = 1; j <= 20; ++j) {
    CHECK(model.pmf(j) == doctest::Approx(oracle[j]).epsilon(1e-8));
  }
  CHECK_THROWS_AS(model.pmf(0), std::domain_error);
  CHECK_THROWS_AS(model.pmf(-3), std::domain_error);
}

TEST_CASE("pmf normalization within 1e-8 for every family") {
  const std::vector<UnitSizeModel> models = {
      UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0}),
      UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {7.5}),
      UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0),
      UnitSizeModel::from_moments(SizeFamily::kCmp, 2.0, 1.0),
      UnitSizeModel::from_moments(SizeFamily::kZeroTruncNegBinomial, 7.0, 5.0),
  };
  for (const auto& m : models) {
    double total = 0.0;
    for (int j = 1; j <= m.support_cap(); ++j) total += m.pmf(j);
    CHECK(std::abs(total - 1.0) < 1e-8);
  }
}

TEST_CASE("cmp with nu=1 reduces to zero-truncated poisson") {
  const auto cmp = UnitSizeModel::from_natural(SizeFamily::kCmp, {1.0, 1.0});
  const auto ztp = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0});
  CHECK(cmp.support_cap() == ztp.support_cap());
  for (int j = 1; j <= ztp.support_cap(); ++j) {
    CHECK(std::abs(cmp.pmf(j) - ztp.pmf(j)) < 1e-12);
  }
  CHECK(cmp.pmf(2) == doctest::Approx(0.290989).epsilon(1e-5));
}

TEST_CASE("moment inversion round trips") {
  SUBCASE("cmp at the default study parameterization") {
    const auto m = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
    CHECK(m.mean() == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(m.sd() == doctest::Approx(3.0).epsilon(1e-6));
  }
  SUBCASE("ztp recovers lambda from its own mean") {
    const double target_mean = ztp_mean_oracle(2.0);
    CHECK(target_mean == doctest::Approx(2.3130).epsilon(1e-4));
    const auto nat = solve_natural_params(SizeFamily::kZeroTruncPoisson, target_mean, 0.0);
    CHECK(nat[0] == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("grid of feasible cells") {
    for (const double mu : {2.0, 5.0, 7.0, 15.0}) {
      for (const double sigma : {1.0, 3.0, 6.0}) {
        for (const auto family : {SizeFamily::kCmp, SizeFamily::kZeroTruncNegBinomial}) {
          try {
            const auto m = UnitSizeModel::from_moments(family, mu, sigma);
            CHECK(m.mean() == doctest::Approx(mu).epsilon(1e-6));
            CHECK(m.sd() == doctest::Approx(sigma).epsilon(1e-6));
          } catch (const FeasibilityError&) {
            // infeasible cell: acceptable, the error is the contract
          }
        }
      }
    }
  }
  SUBCASE("determinism") {
    const auto a = solve_natural_params(SizeFamily::kCmp, 7.0, 3.0);
    const auto b = solve_natural_params(SizeFamily::kCmp, 7.0, 3.0);
    CHECK(a == b);
  }
}

TEST_CASE("infeasible moments raise a feasibility error") {
  CHECK_THROWS_AS(UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 0.05),
                  FeasibilityError);
  CHECK_THROWS_AS(UnitSizeModel::from_moments(SizeFamily::kCmp, 0.9, 1.0),
                  FeasibilityError);
  // ZTNB cannot be under-dispersed relative to the truncated Poisson.
  CHECK_THROWS_AS(UnitSizeModel::from_moments(SizeFamily::kZeroTruncNegBinomial, 7.0, 1.0),
                  FeasibilityError);
  try {
    UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 0.05);
  } catch (const FeasibilityError& e) {
    CHECK(std::string(e.what()).find("sd") != std::string::npos);
  }
}

TEST_CASE("sampling matches the pmf") {
  const auto model = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0});
  Rng rng(20240901);
  const int n = 100000;
  std::vector<int> draws(n);
  for (auto& d : draws) d = model.sample(rng);

  SUBCASE("mean within 4 mc standard errors of the closed form") {
    const auto st = testutil::stats(draws);
    CHECK(ztp_mean_oracle(1.0) == doctest::Approx(1.5820).epsilon(1e-4));
    CHECK(std::abs(st.mean - ztp_mean_oracle(1.0)) < 4.0 * st.mc_se());
  }
  SUBCASE("chi-square goodness of fit over 1..15") {
    std::vector<long> counts(16, 0);
    for (const int d : draws) ++counts[std::min(d, 15)];
    std::vector<double> probs(16, 0.0);
    const auto oracle = ztp_pmf_oracle(1.0, 60);
    for (int j = 1; j < 15; ++j) probs[j] = oracle[j];
    double tail = 0.0;
    for (int j = 15; j <= 60; ++j) tail += oracle[j];
    probs[15] = tail;
    counts.erase(counts.begin());
    probs.erase(probs.begin());
    CHECK(testutil::chi_square_gof_p(counts, probs) > 0.001);
  }
  SUBCASE("fixed seed reproduces the sequence") {
    Rng r1(7), r2(7);
    for (int i = 0; i < 200; ++i) CHECK(model.sample(r1) == model.sample(r2));
  }
}

TEST_CASE("tilted sampling") {
  const auto model = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0});

  SUBCASE("zero tilt is identical to plain sampling") {
    Rng r1(99), r2(99);
    for (int i = 0; i < 200; ++i) CHECK(model.tilted_sample(0.0, r1) == model.sample(r2));
  }
  SUBCASE("chi-square against the numerically normalized tilted pmf") {
    for (const double s : {0.1, std::log(2.0), 1.0}) {
      Rng rng(31 + static_cast<std::uint64_t>(100 * s));
      const int n = 100000;
      std::vector<long> counts(model.support_cap() + 1, 0);
      for (int i = 0; i < n; ++i) ++counts[model.tilted_sample(s, rng)];
      std::vector<double> probs(model.support_cap() + 1, 0.0);
      double z = 0.0;
      for (int j = 1; j <= model.support_cap(); ++j) {
        probs[j] = std::exp(-s * j) * model.pmf(j);
        z += probs[j];
      }
      for (auto& p : probs) p /= z;
      counts.erase(counts.begin());
      probs.erase(probs.begin());
      CHECK(testutil::chi_square_gof_p(counts, probs) > 0.001);
    }
  }
  SUBCASE("acceptance rate identity with gamma_tilt") {
    const double s = std::log(2.0);
    Rng rng(123);
    const int n = 100000;
    std::vector<double> accepted;
    accepted.reserve(n);
    for (int i = 0; i < n; ++i) {
      const int j = model.sample(rng);
      accepted.push_back(rng.u01() < std::exp(-s * j) ? 1.0 : 0.0);
    }
    const auto st = testutil::stats(accepted);
    CHECK(std::abs(st.mean - model.gamma_tilt(s)) < 4.0 * st.mc_se());
  }
  SUBCASE("extreme tilt hits the retry cap") {
    Rng rng(5);
    CHECK_THROWS_AS(model.tilted_sample(80.0, rng, 2000), ChainError);
  }
}

TEST_CASE("gamma_tilt") {
  const auto model = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0});
  SUBCASE("unit value at zero tilt") { CHECK(model.gamma_tilt(0.0) == 1.0); }
  SUBCASE("closed form for the truncated poisson") {
    // gamma(S) = (e^{lambda e^-S} - 1) / (e^lambda - 1), cross-checked in-test
    // by the raw series.
    const double s = std::log(2.0);
    const double closed = std::expm1(std::exp(-s)) / std::expm1(1.0);
    CHECK(closed == doctest::Approx(0.377541).epsilon(1e-5));
    double series = 0.0;
    const auto oracle = ztp_pmf_oracle(1.0, 60);
    for (int j = 1; j <= 60; ++j) series += std::exp(-s * j) * oracle[j];
    CHECK(series == doctest::Approx(closed).epsilon(1e-10));
    CHECK(model.gamma_tilt(s) == doctest::Approx(closed).epsilon(1e-6));
  }
  SUBCASE("strictly decreasing in the tilt") {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
      const double a = 3.0 * rng.u01();
      const double b = a + 0.1 + rng.u01();
      CHECK(model.gamma_tilt(a) > model.gamma_tilt(b));
    }
  }
  SUBCASE("equals the expectation of exp(-jS) under plain draws") {
    const double s = 0.35;
    Rng rng(2024);
    const int n = 1000000;
    std::vector<double> vals;
    vals.reserve(n);
    for (int i = 0; i < n; ++i) vals.push_back(std::exp(-s * model.sample(rng)));
    const auto st = testutil::stats(vals);
    CHECK(std::abs(st.mean - model.gamma_tilt(s)) < 4.0 * st.mc_se());
  }
}

TEST_CASE("support controls") {
  SUBCASE("support floor is honored") {
    const auto m = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0}, 60);
    CHECK(m.support_cap() >= 60);
    CHECK(m.pmf(60) >= 0.0);
    CHECK(std::isfinite(m.log_pmf(60)));
  }
  SUBCASE("explicit cap truncates and renormalizes") {
    const auto m = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0}, 0, 2);
    CHECK(m.support_cap() == 2);
    CHECK(m.pmf(1) + m.pmf(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.pmf(1) / m.pmf(2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.pmf(3) == 0.0);
  }
}
