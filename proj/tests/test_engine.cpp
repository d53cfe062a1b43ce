#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sspop/engine.hpp"
#include "sspop/errors.hpp"
#include "sspop/numeric.hpp"
#include "sspop/ssproc.hpp"
#include "test_util.hpp"
#include "toy_oracle.hpp"

using namespace sspop;

namespace {

ObservedSequence sizes_from_model(const UnitSizeModel& model, int n, std::uint64_t seed) {
  Rng rng(seed);
  ObservedSequence data;
  data.unit_sizes.resize(n);
  for (auto& u : data.unit_sizes) u = model.sample(rng);
  return data;
}

}  // namespace

TEST_CASE("r_sequence") {
  SUBCASE("worked example") {
    const std::vector<int> u_obs{2, 1};
    const std::vector<int> u_unobs{3};
    const auto r = r_sequence(u_obs, u_unobs);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == 6.0);
    CHECK(r[1] == 4.0);
  }
  SUBCASE("boundary N = n") {
    const std::vector<int> u_obs{5};
    const auto r = r_sequence(u_obs, {});
    REQUIRE(r.size() == 1);
    CHECK(r[0] == 5.0);
  }
  SUBCASE("telescoping identity on random instances") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<int> u_obs(1 + rng.uniform_int(0, 9));
      std::vector<int> u_unobs(rng.uniform_int(0, 9));
      for (auto& u : u_obs) u = rng.uniform_int(1, 12);
      for (auto& u : u_unobs) u = rng.uniform_int(1, 12);
      const auto r = r_sequence(u_obs, u_unobs);
      const double unobs_total = std::accumulate(u_unobs.begin(), u_unobs.end(), 0.0);
      CHECK(r.back() - u_obs.back() == doctest::Approx(unobs_total).epsilon(1e-12));
      for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] < r[k - 1]);
    }
  }
}

TEST_CASE("psi draws are exponentials with rate r_k") {
  ObservedSequence data{.unit_sizes = {4, 3, 2, 1}};
  const std::vector<int> u_unobs{5, 5};
  const auto r = r_sequence(data.unit_sizes, u_unobs);

  SUBCASE("mean 1/r_k within 4 mc standard errors") {
    Rng rng(101);
    const int reps = 100000;
    std::vector<std::vector<double>> psis(r.size());
    for (int i = 0; i < reps; ++i) {
      const auto psi = sample_psi(data, u_unobs, rng);
      for (std::size_t k = 0; k < psi.size(); ++k) psis[k].push_back(psi[k]);
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
      const auto st = testutil::stats(psis[k]);
      CHECK(std::abs(st.mean - 1.0 / r[k]) < 4.0 * st.mc_se());
    }
  }
  SUBCASE("scaling all sizes by c scales psi by 1/c on the same stream") {
    ObservedSequence scaled{.unit_sizes = {12, 9, 6, 3}};
    const std::vector<int> scaled_unobs{15, 15};
    Rng r1(7), r2(7);
    for (int i = 0; i < 50; ++i) {
      const auto a = sample_psi(data, u_unobs, r1);
      const auto b = sample_psi(scaled, scaled_unobs, r2);
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(b[k] == doctest::Approx(a[k] / 3.0).epsilon(1e-12));
        CHECK(b[k] >= 0.0);
      }
    }
  }
}

TEST_CASE("unobserved size imputation") {
  const auto model = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {2.0});
  ObservedSequence data{.unit_sizes = {3, 2, 1}};

  SUBCASE("zero tilt reduces to plain draws") {
    ChainState state{.N = 13, .eta = model, .u_unobs = {}, .psi = {0.0, 0.0, 0.0},
                     .n_observed = 3};
    Rng r1(5), r2(5);
    const auto draws = sample_unobs(state, r1);
    REQUIRE(draws.size() == 10);
    for (const int d : draws) CHECK(d == model.sample(r2));
  }
  SUBCASE("matches the normalized tilted pmf") {
    const double tilt = 0.3;
    ChainState state{.N = 3 + 1, .eta = model, .u_unobs = {}, .psi = {tilt}, .n_observed = 3};
    state.psi = {0.1, 0.1, 0.1};
    Rng rng(42);
    std::vector<long> counts(model.support_cap() + 1, 0);
    for (int i = 0; i < 100000; ++i) ++counts[sample_unobs(state, rng)[0]];
    std::vector<double> probs(model.support_cap() + 1, 0.0);
    double z = 0.0;
    for (int j = 1; j <= model.support_cap(); ++j) {
      probs[j] = std::exp(-tilt * j) * model.pmf(j);
      z += probs[j];
    }
    for (auto& p : probs) p /= z;
    counts.erase(counts.begin());
    probs.erase(probs.begin());
    CHECK(testutil::chi_square_gof_p(counts, probs) > 0.001);
  }
  SUBCASE("N = n yields an empty vector") {
    ChainState state{.N = 3, .eta = model, .u_unobs = {}, .psi = {0.2, 0.2, 0.2},
                     .n_observed = 3};
    Rng rng(1);
    CHECK(sample_unobs(state, rng).empty());
  }
}

TEST_CASE("metropolis-hastings core") {
  SUBCASE("zero log ratio always accepts") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(mh_accept(0.0, rng));
  }
  SUBCASE("detailed balance on a two-point target") {
    // target pi = (0.7, 0.3); propose the other state each step
    const double pi[2] = {0.7, 0.3};
    Rng rng(888);
    int state = 0;
    long visits[2] = {0, 0};
    long moves[2] = {0, 0};
    const int steps = 200000;
    for (int i = 0; i < steps; ++i) {
      ++visits[state];
      const int other = 1 - state;
      if (mh_accept(std::log(pi[other]) - std::log(pi[state]), rng)) {
        ++moves[state];
        state = other;
      }
    }
    // theoretical transition probabilities
    const double p01 = std::min(1.0, pi[1] / pi[0]);
    const double p10 = std::min(1.0, pi[0] / pi[1]);
    const double f01 = static_cast<double>(moves[0]) / visits[0];
    const double f10 = static_cast<double>(moves[1]) / visits[1];
    CHECK(std::abs(f01 - p01) < 3.0 * std::sqrt(p01 * (1 - p01) / visits[0]) + 1e-9);
    CHECK(std::abs(f10 - p10) < 3.0 * std::sqrt(p10 * (1 - p10) / visits[1]) + 1e-9);
    // stationary frequencies match the target
    const double pi0_hat = static_cast<double>(visits[0]) / steps;
    CHECK(pi0_hat == doctest::Approx(0.7).epsilon(0.02));
  }
}

TEST_CASE("categorical N step") {
  SUBCASE("flat prior with unit gamma favors the top of the grid") {
    const int n = 4;
    const int n_max = 12;
    std::vector<double> lff, lprior;
    for (int N = n; N <= n_max; ++N) {
      lff.push_back(std::lgamma(N + 1.0) - std::lgamma(N - n + 1.0));
      lprior.push_back(0.0);
    }
    for (std::size_t i = 1; i < lff.size(); ++i) CHECK(lff[i] > lff[i - 1]);
    Rng rng(14);
    std::map<int, long> counts;
    for (int i = 0; i < 4000; ++i) ++counts[sample_N(lff, lprior, n, 0.0, rng)];
    long best_count = 0;
    int best_N = 0;
    for (const auto& [N, c] : counts) {
      if (c > best_count) {
        best_count = c;
        best_N = N;
      }
    }
    CHECK(best_N == n_max);
  }
  SUBCASE("point mass prior always returns the point") {
    const auto prior = SizePrior::point_mass(4, 9);
    std::vector<double> lff, lprior;
    for (int N = 4; N <= prior.n_max(); ++N) {
      lff.push_back(std::lgamma(N + 1.0) - std::lgamma(N - 4 + 1.0));
      lprior.push_back(prior.log_mass(N));
    }
    Rng rng(2);
    for (int i = 0; i < 100; ++i) CHECK(sample_N(lff, lprior, 4, -0.5, rng) == 9);
  }
  SUBCASE("tiny instance matches direct enumeration of the weights") {
    const int n = 2;
    const double log_gamma = std::log(0.8);
    std::vector<double> lff, lprior;
    std::vector<double> exact;
    for (int N = 2; N <= 5; ++N) {
      lff.push_back(std::lgamma(N + 1.0) - std::lgamma(N - 1.0));
      lprior.push_back(0.0);
      exact.push_back(N * (N - 1.0) * std::pow(0.8, N - 2));
    }
    const double total = std::accumulate(exact.begin(), exact.end(), 0.0);
    for (auto& e : exact) e /= total;
    Rng rng(77);
    std::vector<long> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[sample_N(lff, lprior, n, log_gamma, rng) - 2];
    CHECK(testutil::chi_square_gof_p(counts, exact) > 0.001);
  }
  SUBCASE("all-vanishing weights raise a chain error") {
    std::vector<double> lff{0.0, 0.0};
    std::vector<double> lprior(2, -std::numeric_limits<double>::infinity());
    Rng rng(1);
    CHECK_THROWS_AS(sample_N(lff, lprior, 2, 0.0, rng), ChainError);
  }
}

TEST_CASE("eta metropolis step on the desk fixture") {
  // fixture: CMP(7,3) population of 300, PPSWOR sample of 150
  const auto truth = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
  SizedPopulation pop;
  Rng pop_rng(4242);
  for (int i = 0; i < 300; ++i) pop.sizes.push_back(truth.sample(pop_rng));
  const auto order = ppswor_draw(pop, 150, pop_rng);
  ObservedSequence data;
  for (const int idx : order) data.unit_sizes.push_back(pop.sizes[idx]);

  McmcConfig config;
  config.burn_in = 200;
  config.thin = 2;
  config.n_draws = 500;
  config.seed = 99;
  const MhEtaSpec spec{SizeFamily::kCmp, EtaPrior{}};
  const auto draws = run_known_N(data, 300, spec, config);
  REQUIRE(draws.eta_acceptance.size() == 1);
  CHECK(draws.eta_acceptance[0] > 0.1);
  CHECK(draws.eta_acceptance[0] < 0.7);
}

TEST_CASE("known-N sampler against a quadrature oracle") {
  // N = n: no imputation, so the eta draws target prior x likelihood of the
  // observed sizes alone. Compare against 2-d grid quadrature for the
  // one-parameter truncated Poisson model.
  const auto gen = UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {2.0});
  const auto data = sizes_from_model(gen, 40, 2026);

  const EtaPrior prior{};
  McmcConfig config;
  config.burn_in = 1000;
  config.thin = 5;
  config.n_draws = 4000;
  config.seed = 17;
  const auto draws =
      run_known_N(data, data.n(), MhEtaSpec{SizeFamily::kZeroTruncPoisson, prior}, config);

  // quadrature oracle: independent closed-form truncated-Poisson likelihood
  std::vector<long> hist(64, 0);
  for (const int u : data.unit_sizes) ++hist[u];
  auto ztp_mean = [](double lambda) { return lambda / (-std::expm1(-lambda)); };
  auto loglik_mu = [&](double mu) {
    double lo = 1e-8, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ztp_mean(mid) < mu ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    double ll = 0.0;
    for (int j = 1; j < 64; ++j) {
      if (hist[j] == 0) continue;
      ll += hist[j] * (j * std::log(lambda) - std::lgamma(j + 1.0) -
                       std::log(std::expm1(lambda)));
    }
    return ll;
  };
  double num = 0.0, den = 0.0;
  const int n_mu = 600, n_ls = 200;
  const double ll_ref = loglik_mu(2.3);
  for (int i = 1; i < n_mu; ++i) {
    const double mu = 1.0 + (14.0 * i) / n_mu;
    const double ll = loglik_mu(mu);
    for (int j = 1; j < n_ls; ++j) {
      const double sigma = std::exp(std::log(0.05) + (std::log(40.0 / 0.05) * j) / n_ls);
      const double w = std::exp(prior.log_density(mu, sigma) + ll - ll_ref) * sigma;
      num += mu * w;
      den += w;
    }
  }
  const double quad_mean = num / den;
  CHECK(draws.mean_mu() == doctest::Approx(quad_mean).epsilon(0.02));
}

TEST_CASE("known-N sampler determinism and ordering sensitivity") {
  const auto gen = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
  auto data = sizes_from_model(gen, 30, 7);
  std::sort(data.unit_sizes.begin(), data.unit_sizes.end(), std::greater<>());

  McmcConfig config;
  config.burn_in = 500;
  config.thin = 5;
  config.n_draws = 3000;
  config.seed = 31;
  config.retain_unobs_sizes = true;
  const MhEtaSpec spec{SizeFamily::kCmp, EtaPrior{}};

  SUBCASE("fixed seed gives bitwise-identical draws") {
    const auto a = run_known_N(data, 60, spec, config);
    const auto b = run_known_N(data, 60, spec, config);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
    CHECK(a.N == b.N);
  }
  SUBCASE("steeper decline lowers the predictive unobserved mean") {
    ObservedSequence ascending = data;
    std::reverse(ascending.unit_sizes.begin(), ascending.unit_sizes.end());
    const auto steep = run_known_N(data, 60, spec, config);
    const auto shallow = run_known_N(ascending, 60, spec, config);
    auto predictive_mean = [](const PosteriorDraws& d) {
      double s = 0.0;
      long c = 0;
      for (const auto& v : d.unobs_sizes) {
        for (const int u : v) s += u;
        c += static_cast<long>(v.size());
      }
      return s / c;
    };
    CHECK(predictive_mean(steep) < predictive_mean(shallow));
  }
}

TEST_CASE("unknown-N sampler hits the enumerated toy posterior") {
  const auto toy = toy::make_toy_problem();
  const auto exact = toy::exact_posterior_N(toy);

  McmcConfig config;
  config.burn_in = 500;
  config.thin = 2;
  config.n_draws = 20000;
  config.seed = 505;

  SUBCASE("reference step order") {
    const auto draws = run_unknown_N(toy.data, toy.prior, toy.eta, config);
    const auto empirical = testutil::empirical_pmf(draws.N);
    CHECK(testutil::total_variation(empirical, exact) < 0.05);
  }
  SUBCASE("swapped eta/psi order leaves the stationary law unchanged") {
    McmcConfig swapped = config;
    swapped.swap_eta_psi_order = true;
    swapped.seed = 606;
    const auto draws = run_unknown_N(toy.data, toy.prior, toy.eta, swapped);
    const auto empirical = testutil::empirical_pmf(draws.N);
    CHECK(testutil::total_variation(empirical, exact) < 0.05);
  }
}

TEST_CASE("point-mass prior reduces the unknown-N sampler to known N") {
  const auto gen = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
  const auto data = sizes_from_model(gen, 40, 13);

  McmcConfig config;
  config.burn_in = 500;
  config.thin = 5;
  config.n_draws = 2000;
  config.seed = 23;
  const MhEtaSpec spec{SizeFamily::kCmp, EtaPrior{}};

  const auto fixed = run_unknown_N(data, SizePrior::point_mass(40, 80), spec, config);
  for (const int N : fixed.N) CHECK(N == 80);

  McmcConfig other = config;
  other.seed = 24;
  const auto known = run_known_N(data, 80, spec, other);
  CHECK(testutil::ks_two_sample_p(fixed.mu, known.mu) > 0.01);
}

TEST_CASE("joint distribution check via successive-conditional simulation") {
  // Forward draws of (eta, N) against a chain that alternates data
  // resimulation with Gibbs sweeps built from the public full conditionals;
  // both must reproduce the prior moments of N and the model mean.
  const auto toy = toy::make_toy_problem();
  const int n = 4;
  const auto prior = SizePrior::flat(n, 12);

  std::vector<double> lff, lprior;
  for (int N = n; N <= prior.n_max(); ++N) {
    lff.push_back(std::lgamma(N + 1.0) - std::lgamma(N - n + 1.0));
    lprior.push_back(prior.log_mass(N));
  }

  Rng rng(321);
  auto draw_population = [&](const UnitSizeModel& model, int N) {
    SizedPopulation pop;
    pop.sizes.resize(N);
    for (auto& s : pop.sizes) s = model.sample(rng);
    return pop;
  };

  // forward samples from the prior
  std::vector<double> fwd_N, fwd_mu;
  for (int i = 0; i < 20000; ++i) {
    const int m = rng.u01() < 0.5 ? 0 : 1;
    const int N = prior.sample(rng);
    fwd_N.push_back(N);
    fwd_mu.push_back(toy.eta.models[m].mean());
  }

  // successive-conditional chain
  int m = 0;
  int N = prior.sample(rng);
  std::vector<int> u_unobs;
  ObservedSequence data;
  std::vector<double> sc_N, sc_mu;
  const int cycles = 60000;
  for (int t = 0; t < cycles; ++t) {
    // resimulate data given (eta, N): population, then a PPSWOR prefix
    const auto pop = draw_population(toy.eta.models[m], N);
    const auto order = ppswor_draw(pop, n, rng);
    data.unit_sizes.clear();
    std::vector<char> sampled(N, 0);
    for (const int idx : order) {
      data.unit_sizes.push_back(pop.sizes[idx]);
      sampled[idx] = 1;
    }
    u_unobs.clear();
    for (int i = 0; i < N; ++i) {
      if (!sampled[i]) u_unobs.push_back(pop.sizes[i]);
    }
    // one Gibbs sweep: eta, psi, N, unobs
    std::vector<double> logw(2);
    for (int c = 0; c < 2; ++c) {
      double ll = toy.eta.log_prior[c];
      for (const int u : data.unit_sizes) ll += std::log(toy.f[c][u - 1]);
      for (const int u : u_unobs) ll += std::log(toy.f[c][u - 1]);
      logw[c] = ll;
    }
    m = std::log(rng.u01_pos()) <
                logw[1] - log_sum_exp(std::span(logw.data(), 2))
            ? 1
            : 0;
    const auto psi = sample_psi(data, u_unobs, rng);
    const double tilt = std::accumulate(psi.begin(), psi.end(), 0.0);
    N = sample_N(lff, lprior, n, std::log(toy.eta.models[m].gamma_tilt(tilt)), rng);
    ChainState state{.N = N, .eta = toy.eta.models[m], .u_unobs = {}, .psi = psi,
                     .n_observed = n};
    u_unobs = sample_unobs(state, rng);
    sc_N.push_back(N);
    sc_mu.push_back(toy.eta.models[m].mean());
  }

  const auto fN = testutil::stats(fwd_N);
  const auto fmu = testutil::stats(fwd_mu);
  const double scN_mean = testutil::stats(sc_N).mean;
  const double scmu_mean = testutil::stats(sc_mu).mean;
  const double seN =
      std::sqrt(std::pow(testutil::batch_means_se(sc_N), 2) + std::pow(fN.mc_se(), 2));
  const double semu =
      std::sqrt(std::pow(testutil::batch_means_se(sc_mu), 2) + std::pow(fmu.mc_se(), 2));
  CHECK(std::abs(scN_mean - fN.mean) < 4.0 * seN);
  CHECK(std::abs(scmu_mean - fmu.mean) < 4.0 * semu);
}

TEST_CASE("multi-chain runs merge deterministically") {
  const auto toy = toy::make_toy_problem();
  McmcConfig config;
  config.burn_in = 100;
  config.thin = 2;
  config.n_draws = 300;
  config.seed = 55;
  config.parallel_chains = 2;

  config.threads = 1;
  const auto serial = run_unknown_N(toy.data, toy.prior, toy.eta, config);
  config.threads = 2;
  const auto parallel = run_unknown_N(toy.data, toy.prior, toy.eta, config);

  CHECK(serial.size() == 600);
  CHECK(serial.N == parallel.N);
  CHECK(serial.mu == parallel.mu);
  CHECK(serial.chain == parallel.chain);
  CHECK(serial.eta_acceptance == parallel.eta_acceptance);
  CHECK(std::is_sorted(serial.chain.begin(), serial.chain.end()));
}

TEST_CASE("chain failure surfaces as a chain error") {
  // every grid model truncated below the observed maximum: zero mass
  ObservedSequence data{.unit_sizes = {5, 2, 1}};
  GridEtaSpec grid{
      .models = {UnitSizeModel::from_natural(SizeFamily::kZeroTruncPoisson, {1.0}, 0, 2)},
      .log_prior = {0.0}};
  McmcConfig config;
  config.burn_in = 10;
  config.thin = 1;
  config.n_draws = 10;
  CHECK_THROWS_AS(run_known_N(data, 6, grid, config), ChainError);
}

TEST_CASE("input validation") {
  ObservedSequence data{.unit_sizes = {3, 2}};
  const MhEtaSpec spec{SizeFamily::kCmp, EtaPrior{}};
  McmcConfig config;
  CHECK_THROWS_AS(run_known_N(data, 1, spec, config), std::invalid_argument);
  CHECK_THROWS_AS(run_unknown_N(data, SizePrior::flat(5, 50), spec, config),
                  std::invalid_argument);
  ObservedSequence bad{.unit_sizes = {3, 0}};
  CHECK_THROWS_AS(run_known_N(bad, 5, spec, config), std::invalid_argument);
}
