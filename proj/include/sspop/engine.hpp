#ifndef SSPOP_ENGINE_HPP
#define SSPOP_ENGINE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sspop/data.hpp"
#include "sspop/priors.hpp"
#include "sspop/rng.hpp"
#include "sspop/size_dist.hpp"

namespace sspop {

// Augmented Gibbs samplers for the successive-sampling size model: the
// three-component sampler conditions on a known population size N, the
// four-component one adds a direct categorical N step. Data augmentation uses
// one latent exponential psi_k per observed rank (rate r_k), which makes the
// unobserved sizes conditionally i.i.d. draws from the exponentially tilted
// unit-size PMF and gives N a closed-form categorical full conditional.

struct McmcConfig {
  int burn_in = 1000;
  int thin = 10;
  int n_draws = 2000;            // per chain, after burn-in and thinning
  std::uint64_t seed = 1;
  int parallel_chains = 1;
  int threads = 1;
  double mu_proposal_scale = 0.0;       // 0 = default 0.1 * prior sigma0
  double sigma_log_proposal_scale = 0.2;
  int n_max = 0;                 // 0 = default_n_max rule for the prior
  bool retain_unobs_sizes = false;
  long tilt_retry_cap = 1'000'000;
  bool swap_eta_psi_order = false;  // diagnostic: eta<->psi step order swap

  void validate() const;
};

// Current state of one chain. eta_mu/eta_sigma are the Metropolis
// coordinates of the (mean, sd) parameterization; for one-parameter families
// the realized model sd is implied by the mean, so the sd coordinate moves
// under its prior alone and must be carried separately from the model.
struct ChainState {
  int N = 0;
  UnitSizeModel eta;
  double eta_mu = 0.0;
  double eta_sigma = 0.0;
  std::vector<int> u_unobs;  // N - n entries
  std::vector<double> psi;   // n entries
  int n_observed = 0;
};

// Continuous eta: Metropolis-Hastings on the (mean, sd) parameterization.
struct MhEtaSpec {
  SizeFamily family = SizeFamily::kCmp;
  EtaPrior prior;
};

// Discrete eta: exact Gibbs draw over a fixed model grid with prior weights.
struct GridEtaSpec {
  std::vector<UnitSizeModel> models;
  std::vector<double> log_prior;  // same length; need not be normalized
};

using EtaSpec = std::variant<MhEtaSpec, GridEtaSpec>;

// Post-burn-in draws, merged over chains in chain order.
struct PosteriorDraws {
  std::vector<int> iteration;  // iteration index within the chain
  std::vector<int> chain;
  std::vector<int> N;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<std::vector<int>> unobs_sizes;  // retained when configured
  std::vector<double> eta_acceptance;         // per chain
  int n_observed = 0;

  std::size_t size() const { return N.size(); }
  double mean_N() const;
  double mean_mu() const;
  double mean_sigma() const;
};

// --- full-conditional building blocks (exposed for tests and diagnostics) ---

// r_k = total population size minus the sizes already observed before rank k.
std::vector<double> r_sequence(std::span<const int> u_obs, std::span<const int> u_unobs);

// psi_k ~ Exponential(rate r_k), realized as standard exponential / r_k.
std::vector<double> sample_psi(const ObservedSequence& data,
                               std::span<const int> u_unobs, Rng& rng);

// N - n i.i.d. draws from the tilted PMF with tilt sum(psi).
std::vector<int> sample_unobs(const ChainState& state, Rng& rng,
                              long tilt_retry_cap = 1'000'000);

// One MH accept decision: log acceptance ratio = target difference plus the
// Hastings correction for an asymmetric proposal.
bool mh_accept(double log_ratio, Rng& rng);

struct EtaMhResult {
  UnitSizeModel eta;
  double mu = 0.0;
  double sigma = 0.0;
  bool accepted = false;
};

// One random-walk MH step on (mean, sd): Gaussian on the mean, multiplicative
// log-normal on the sd (with Hastings correction). Proposals with infeasible
// moments are auto-rejected.
EtaMhResult sample_eta_mh(const ChainState& state, const ObservedSequence& data,
                          const MhEtaSpec& spec, double mu_scale, double sigma_log_scale,
                          int support_floor, Rng& rng);

// Exact categorical draw of N over {n..n_max} with weights
// N!/(N-n)! * prior(N) * gamma(sum psi)^(N-n), computed in log space.
// log_falling_factorial and log_prior are tabulated over the grid.
int sample_N(std::span<const double> log_falling_factorial,
             std::span<const double> log_prior, int n, double log_gamma_tilt, Rng& rng);

// --- samplers ---

PosteriorDraws run_known_N(const ObservedSequence& data, int N, const EtaSpec& eta,
                           const McmcConfig& config);

PosteriorDraws run_unknown_N(const ObservedSequence& data, const SizePrior& prior,
                             const EtaSpec& eta, const McmcConfig& config);

}  // namespace sspop

#endif
