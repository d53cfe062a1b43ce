#ifndef SSPOP_SUMMARY_HPP
#define SSPOP_SUMMARY_HPP

#include <span>
#include <vector>

#include "sspop/engine.hpp"
#include "sspop/priors.hpp"

namespace sspop {

// Posterior summary of a discrete quantity. The HPD set is built greedily by
// descending mass (ties toward smaller values); the interval hull [lo, hi] is
// what gets reported, mirroring interval-style credible regions.
struct DiscreteSummary {
  double mean = 0.0;
  int median = 0;
  int mode = 0;
  double hpd_level = 0.95;
  std::vector<int> hpd_set;  // sorted ascending
  int hpd_lo = 0;
  int hpd_hi = 0;
  double mass_captured = 0.0;
};

DiscreteSummary summarize(std::span<const int> draws, double level);

struct DensityRow {
  int value;  // left edge of the bucket [value, value + step)
  double prior_mass;
  double posterior_mass;
};

// Prior/posterior table over the prior's grid for overlay plots. Both
// columns are normalized over the emitted rows.
std::vector<DensityRow> density_table(const SizePrior& prior, std::span<const int> draws,
                                      int step = 1);

// Basic split-chain stability check: each chain is halved and the half-means
// of N are compared on the pooled sd scale. Not a substitute for full
// convergence diagnostics.
struct SplitChainDiagnostic {
  double max_discrepancy_z = 0.0;
  bool warn = false;
};

SplitChainDiagnostic split_chain_diagnostic(const PosteriorDraws& draws,
                                            double warn_threshold = 4.0);

}  // namespace sspop

#endif
