#ifndef SSPOP_SSPROC_HPP
#define SSPOP_SSPROC_HPP

#include <map>
#include <span>
#include <vector>

#include "sspop/data.hpp"
#include "sspop/rng.hpp"
#include "sspop/size_dist.hpp"

namespace sspop {

// Successive sampling (PPSWOR): each unit is selected with probability
// proportional to its size from among the units not yet selected. Zero-size
// units are never selected but still count toward the population.

// Ordered indices (0-based) of an n-unit successive sample.
std::vector<int> ppswor_draw(const SizedPopulation& pop, int n, Rng& rng);

// Log probability of observing exactly the ordered index sequence g under
// successive sampling from pop. This is the ordered-sequence kernel
// sum_k log(u_{g_k} / r_k); the N!/(N-n)! relabeling factor of the full
// likelihood is applied separately in the engine's N step.
double log_ordered_sequence_prob(const SizedPopulation& pop, std::span<const int> g);

// Monte-Carlo per-size inclusion probabilities under PPSWOR of n units from
// a size spectrum (size -> unit count). Deterministic for a fixed seed and
// any thread count.
std::map<int, double> ss_inclusion_probs(const std::map<int, long>& spectrum, int n,
                                         int n_sims, std::uint64_t seed,
                                         int threads = 1);

// Successive-sampling prevalence estimator: Horvitz-Thompson ratio with
// inclusion probabilities simulated from the observed sizes plus a
// reconstruction of the unobserved ones.
//
// Plug-in form: population size fixed at N, unobserved sizes drawn from the
// model (refreshed across simulation blocks).
double ss_prevalence_plugin(const ObservedSequence& data, const UnitSizeModel& model,
                            int N, int n_sims, std::uint64_t seed, int threads = 1);

// Full-propagation form: inclusion probabilities averaged over retained
// posterior snapshots of the unobserved sizes (one vector per draw).
double ss_prevalence_posterior(const ObservedSequence& data,
                               std::span<const std::vector<int>> unobs_snapshots,
                               int n_sims, std::uint64_t seed, int threads = 1);

}  // namespace sspop

#endif
