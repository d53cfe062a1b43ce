// Benchmark of the OpenMP-parallel kernels against their serial reference
// paths. Each kernel is deterministic for a fixed seed regardless of thread
// count, so the harness also verifies that parallel results equal serial.

#include <cstdio>
#include <cstring>
#include <map>
#include <string>

#include <omp.h>

#include "sspop/engine.hpp"
#include "sspop/parallel.hpp"
#include "sspop/ssproc.hpp"
#include "sspop/studylab.hpp"

using namespace sspop;

namespace {

struct Timing {
  double serial_s = 0.0;
  double parallel_s = 0.0;
  bool identical = false;
};

void report(const char* name, const Timing& t) {
  std::printf("%-28s %9.3fs %9.3fs %7.2fx  %s\n", name, t.serial_s, t.parallel_s,
              t.serial_s / t.parallel_s, t.identical ? "identical" : "MISMATCH");
}

Timing bench_inclusion_probs(int threads) {
  const auto model = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
  Rng rng(1);
  std::map<int, long> spectrum;
  for (int i = 0; i < 2000; ++i) ++spectrum[model.sample(rng)];

  Timing t;
  double t0 = omp_get_wtime();
  const auto serial = ss_inclusion_probs(spectrum, 500, 4000, 42, 1);
  t.serial_s = omp_get_wtime() - t0;
  t0 = omp_get_wtime();
  const auto parallel = ss_inclusion_probs(spectrum, 500, 4000, 42, threads);
  t.parallel_s = omp_get_wtime() - t0;
  t.identical = serial == parallel;
  return t;
}

Timing bench_multichain_fit(int threads) {
  const auto model = UnitSizeModel::from_moments(SizeFamily::kCmp, 7.0, 3.0);
  Rng rng(2);
  SizedPopulation pop;
  for (int i = 0; i < 300; ++i) pop.sizes.push_back(model.sample(rng));
  ObservedSequence data;
  for (const int idx : ppswor_draw(pop, 150, rng)) {
    data.unit_sizes.push_back(pop.sizes[idx]);
  }
  const auto prior = SizePrior::beta_proportion(150, 900, 1.0, 3.0);

  McmcConfig config;
  config.burn_in = 500;
  config.thin = 5;
  config.n_draws = 500;
  config.seed = 7;
  config.parallel_chains = std::max(2, threads);
  const MhEtaSpec eta{SizeFamily::kCmp, EtaPrior{}};

  Timing t;
  config.threads = 1;
  double t0 = omp_get_wtime();
  const auto serial = run_unknown_N(data, prior, eta, config);
  t.serial_s = omp_get_wtime() - t0;
  config.threads = threads;
  t0 = omp_get_wtime();
  const auto parallel = run_unknown_N(data, prior, eta, config);
  t.parallel_s = omp_get_wtime() - t0;
  t.identical = serial.N == parallel.N && serial.mu == parallel.mu;
  return t;
}

Timing bench_replication_study(int threads) {
  StudyDesign design;
  design.population_size = 200;
  design.sample_size = 100;
  design.population = StudyDesign::Population::kModelSizes;
  design.arm = StudyDesign::Arm::kPpswor;
  design.replicates = 8;
  design.prior.kind = SizePriorKind::kBetaProportion;
  design.prior.mean = 200.0;
  design.prior.n_max = 1200;
  design.mcmc.burn_in = 500;
  design.mcmc.thin = 5;
  design.mcmc.n_draws = 500;
  design.master_seed = 11;

  Timing t;
  design.threads = 1;
  double t0 = omp_get_wtime();
  const auto serial = run_replication_study(design);
  t.serial_s = omp_get_wtime() - t0;
  design.threads = threads;
  t0 = omp_get_wtime();
  const auto parallel = run_replication_study(design);
  t.parallel_s = omp_get_wtime() - t0;
  t.identical = true;
  for (int i = 0; i < design.replicates; ++i) {
    t.identical = t.identical &&
                  serial.replicates[i].posterior_mean ==
                      parallel.replicates[i].posterior_mean &&
                  serial.replicates[i].hpd_hi == parallel.replicates[i].hpd_hi;
  }
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = hardware_threads();
  if (argc > 1) threads = std::atoi(argv[1]);
  std::printf("kernel                          serial   parallel  speedup  check (%d threads)\n",
              threads);
  report("inclusion probabilities", bench_inclusion_probs(threads));
  report("multi-chain fit", bench_multichain_fit(threads));
  report("replication study", bench_replication_study(threads));
  return 0;
}
