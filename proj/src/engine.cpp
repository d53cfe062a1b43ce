#include "sspop/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sspop/errors.hpp"
#include "sspop/numeric.hpp"
#include "sspop/parallel.hpp"

namespace sspop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Histogram of unit sizes; log likelihood evaluation walks the nonzero cells.
class SizeHistogram {
 public:
  void add(int size) {
    if (size >= static_cast<int>(counts_.size())) counts_.resize(size + 1, 0);
    ++counts_[size];
  }
  void add_all(std::span<const int> sizes) {
    for (const int s : sizes) add(s);
  }
  double log_likelihood(const UnitSizeModel& model) const {
    double ll = 0.0;
    for (int j = 1; j < static_cast<int>(counts_.size()); ++j) {
      if (counts_[j] == 0) continue;
      const double lp = model.log_pmf(j);
      if (lp == kNegInf) return kNegInf;
      ll += counts_[j] * lp;
    }
    return ll;
  }

 private:
  std::vector<long> counts_;
};

// One Gibbs chain. The update order follows the reference algorithm:
// eta, psi, (N,) unobserved sizes.
class GibbsChain {
 public:
  GibbsChain(const ObservedSequence& data, const SizePrior* prior, int known_N,
             const EtaSpec& eta_spec, const McmcConfig& config, int chain_index)
      : data_(data),
        prior_(prior),
        eta_spec_(eta_spec),
        config_(config),
        chain_index_(chain_index),
        rng_(config.seed, static_cast<std::uint64_t>(chain_index) + 1) {
    support_floor_ = 3 * data_.max_size();
    obs_hist_.add_all(data_.unit_sizes);

    if (prior_) {
      const int n_max = prior_->n_max();
      log_falling_factorial_.resize(n_max - data_.n() + 1);
      log_prior_table_.resize(n_max - data_.n() + 1);
      for (int N = data_.n(); N <= n_max; ++N) {
        log_falling_factorial_[N - data_.n()] =
            std::lgamma(N + 1.0) - std::lgamma(N - data_.n() + 1.0);
        log_prior_table_[N - data_.n()] = prior_->log_mass(N);
      }
    }

    state_.n_observed = data_.n();
    state_.N = prior_ ? prior_->median() : known_N;
    state_.eta = initial_eta();
    if (const auto* mh = std::get_if<MhEtaSpec>(&eta_spec_)) {
      state_.eta_mu = mh->prior.mu0;
      state_.eta_sigma = mh->prior.sigma0;
    } else {
      state_.eta_mu = state_.eta.mean();
      state_.eta_sigma = state_.eta.sd();
    }
    state_.u_unobs.resize(state_.N - data_.n());
    for (auto& u : state_.u_unobs) u = state_.eta.sample(rng_);
  }

  void run(PosteriorDraws& out) {
    const long total = static_cast<long>(config_.burn_in) +
                       static_cast<long>(config_.thin) * config_.n_draws;
    long eta_attempts = 0, eta_accepts = 0;
    for (long iter = 1; iter <= total; ++iter) {
      if (config_.swap_eta_psi_order) {
        psi_step();
        eta_step(eta_attempts, eta_accepts);
      } else {
        eta_step(eta_attempts, eta_accepts);
        psi_step();
      }
      if (prior_) n_step();
      unobs_step();

      if (state_.N - data_.n() != static_cast<int>(state_.u_unobs.size())) {
        throw ChainError("state invariant violated: unobserved size count");
      }
      if (iter > config_.burn_in && (iter - config_.burn_in) % config_.thin == 0) {
        out.iteration.push_back(static_cast<int>(iter));
        out.chain.push_back(chain_index_);
        out.N.push_back(state_.N);
        out.mu.push_back(state_.eta_mu);
        out.sigma.push_back(state_.eta_sigma);
        if (config_.retain_unobs_sizes) out.unobs_sizes.push_back(state_.u_unobs);
      }
    }
    out.eta_acceptance.push_back(
        eta_attempts > 0 ? static_cast<double>(eta_accepts) / eta_attempts : 1.0);
  }

 private:
  UnitSizeModel initial_eta() {
    if (const auto* mh = std::get_if<MhEtaSpec>(&eta_spec_)) {
      return UnitSizeModel::from_moments(mh->family, mh->prior.mu0, mh->prior.sigma0,
                                         support_floor_);
    }
    const auto& grid = std::get<GridEtaSpec>(eta_spec_);
    if (grid.models.empty() || grid.models.size() != grid.log_prior.size()) {
      throw std::invalid_argument("eta grid needs models with matching prior weights");
    }
    const auto it = std::max_element(grid.log_prior.begin(), grid.log_prior.end());
    return grid.models[it - grid.log_prior.begin()];
  }

  double combined_log_likelihood(const UnitSizeModel& model) const {
    SizeHistogram unobs_hist;
    unobs_hist.add_all(state_.u_unobs);
    const double obs = obs_hist_.log_likelihood(model);
    if (obs == kNegInf) return kNegInf;
    const double unobs = unobs_hist.log_likelihood(model);
    return unobs == kNegInf ? kNegInf : obs + unobs;
  }

  void eta_step(long& attempts, long& accepts) {
    if (const auto* mh = std::get_if<MhEtaSpec>(&eta_spec_)) {
      const double mu_scale = config_.mu_proposal_scale > 0.0
                                  ? config_.mu_proposal_scale
                                  : 0.1 * mh->prior.sigma0;
      const EtaMhResult result = sample_eta_mh(state_, data_, *mh, mu_scale,
                                               config_.sigma_log_proposal_scale,
                                               support_floor_, rng_);
      ++attempts;
      if (result.accepted) {
        ++accepts;
        state_.eta = result.eta;
        state_.eta_mu = result.mu;
        state_.eta_sigma = result.sigma;
      }
      return;
    }
    // Exact Gibbs draw over the model grid.
    const auto& grid = std::get<GridEtaSpec>(eta_spec_);
    std::vector<double> logw(grid.models.size());
    for (std::size_t i = 0; i < grid.models.size(); ++i) {
      logw[i] = grid.log_prior[i] + combined_log_likelihood(grid.models[i]);
    }
    const double lse = log_sum_exp(logw);
    if (lse == kNegInf) {
      throw ChainError("eta grid step: zero posterior mass across all models");
    }
    const double u = rng_.u01();
    double cum = 0.0;
    std::size_t pick = grid.models.size() - 1;
    for (std::size_t i = 0; i < logw.size(); ++i) {
      cum += std::exp(logw[i] - lse);
      if (u < cum) {
        pick = i;
        break;
      }
    }
    state_.eta = grid.models[pick];
    state_.eta_mu = state_.eta.mean();
    state_.eta_sigma = state_.eta.sd();
  }

  void psi_step() { state_.psi = sample_psi(data_, state_.u_unobs, rng_); }

  void n_step() {
    const double tilt = std::accumulate(state_.psi.begin(), state_.psi.end(), 0.0);
    const double log_gamma = std::log(state_.eta.gamma_tilt(tilt));
    state_.N = sample_N(log_falling_factorial_, log_prior_table_, data_.n(), log_gamma,
                        rng_);
  }

  void unobs_step() {
    state_.u_unobs = sample_unobs(state_, rng_, config_.tilt_retry_cap);
  }

  const ObservedSequence& data_;
  const SizePrior* prior_;  // null for the known-N sampler
  const EtaSpec& eta_spec_;
  const McmcConfig& config_;
  int chain_index_;
  Rng rng_;
  int support_floor_;
  SizeHistogram obs_hist_;
  std::vector<double> log_falling_factorial_;
  std::vector<double> log_prior_table_;
  ChainState state_;
};

PosteriorDraws run_chains(const ObservedSequence& data, const SizePrior* prior,
                          int known_N, const EtaSpec& eta, const McmcConfig& config) {
  data.validate();
  config.validate();

  std::vector<PosteriorDraws> per_chain(config.parallel_chains);
  parallel_for_capturing(config.parallel_chains, config.threads, [&](int c) {
    GibbsChain chain(data, prior, known_N, eta, config, c);
    chain.run(per_chain[c]);
  });

  PosteriorDraws merged;
  merged.n_observed = data.n();
  for (const auto& d : per_chain) {
    merged.iteration.insert(merged.iteration.end(), d.iteration.begin(), d.iteration.end());
    merged.chain.insert(merged.chain.end(), d.chain.begin(), d.chain.end());
    merged.N.insert(merged.N.end(), d.N.begin(), d.N.end());
    merged.mu.insert(merged.mu.end(), d.mu.begin(), d.mu.end());
    merged.sigma.insert(merged.sigma.end(), d.sigma.begin(), d.sigma.end());
    merged.unobs_sizes.insert(merged.unobs_sizes.end(), d.unobs_sizes.begin(),
                              d.unobs_sizes.end());
    merged.eta_acceptance.insert(merged.eta_acceptance.end(), d.eta_acceptance.begin(),
                                 d.eta_acceptance.end());
  }
  return merged;
}

}  // namespace

void McmcConfig::validate() const {
  if (burn_in < 0) throw std::invalid_argument("burn_in must be nonnegative");
  if (thin < 1) throw std::invalid_argument("thin must be positive");
  if (n_draws < 1) throw std::invalid_argument("n_draws must be positive");
  if (parallel_chains < 1) throw std::invalid_argument("parallel_chains must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
  if (sigma_log_proposal_scale <= 0.0) {
    throw std::invalid_argument("sigma proposal scale must be positive");
  }
  if (tilt_retry_cap < 1) throw std::invalid_argument("tilt retry cap must be positive");
}

double PosteriorDraws::mean_N() const {
  return std::accumulate(N.begin(), N.end(), 0.0) / static_cast<double>(N.size());
}
double PosteriorDraws::mean_mu() const { return mean_of(mu); }
double PosteriorDraws::mean_sigma() const { return mean_of(sigma); }

std::vector<double> r_sequence(std::span<const int> u_obs, std::span<const int> u_unobs) {
  double total = 0.0;
  for (const int u : u_obs) total += u;
  for (const int u : u_unobs) total += u;
  std::vector<double> r(u_obs.size());
  for (std::size_t k = 0; k < u_obs.size(); ++k) {
    r[k] = total;
    total -= u_obs[k];
  }
  return r;
}

std::vector<double> sample_psi(const ObservedSequence& data,
                               std::span<const int> u_unobs, Rng& rng) {
  const std::vector<double> r = r_sequence(data.unit_sizes, u_unobs);
  std::vector<double> psi(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) psi[k] = rng.exponential() / r[k];
  return psi;
}

std::vector<int> sample_unobs(const ChainState& state, Rng& rng, long tilt_retry_cap) {
  const double tilt = std::accumulate(state.psi.begin(), state.psi.end(), 0.0);
  const int count = state.N - state.n_observed;
  if (count < 0) throw ChainError("population size below the observed count");
  std::vector<int> draws(count);
  for (auto& u : draws) u = state.eta.tilted_sample(tilt, rng, tilt_retry_cap);
  return draws;
}

bool mh_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return std::log(rng.u01_pos()) < log_ratio;
}

EtaMhResult sample_eta_mh(const ChainState& state, const ObservedSequence& data,
                          const MhEtaSpec& spec, double mu_scale, double sigma_log_scale,
                          int support_floor, Rng& rng) {
  SizeHistogram hist;
  hist.add_all(data.unit_sizes);
  hist.add_all(state.u_unobs);

  const double mu = state.eta_mu;
  const double sigma = state.eta_sigma;
  const double current_target =
      spec.prior.log_density(mu, sigma) + hist.log_likelihood(state.eta);
  if (!std::isfinite(current_target)) {
    throw ChainError("non-finite posterior density at the current eta state");
  }

  const double mu_prop = mu + mu_scale * rng.normal();
  const double sigma_prop = sigma * std::exp(sigma_log_scale * rng.normal());

  UnitSizeModel proposal;
  try {
    proposal = UnitSizeModel::from_moments(spec.family, mu_prop, sigma_prop, support_floor);
  } catch (const FeasibilityError&) {
    return {state.eta, mu, sigma, false};  // infeasible moments: auto-reject
  }
  const double proposal_target =
      spec.prior.log_density(mu_prop, sigma_prop) + hist.log_likelihood(proposal);
  // Hastings correction for the multiplicative sd proposal.
  const double log_ratio = proposal_target - current_target +
                           std::log(sigma_prop) - std::log(sigma);
  if (std::isfinite(log_ratio) && mh_accept(log_ratio, rng)) {
    return {std::move(proposal), mu_prop, sigma_prop, true};
  }
  return {state.eta, mu, sigma, false};
}

int sample_N(std::span<const double> log_falling_factorial,
             std::span<const double> log_prior, int n, double log_gamma_tilt, Rng& rng) {
  if (log_falling_factorial.size() != log_prior.size() || log_prior.empty()) {
    throw std::invalid_argument("N-step tables misaligned");
  }
  const std::size_t grid = log_prior.size();
  std::vector<double> logw(grid);
  double peak = kNegInf;
  for (std::size_t i = 0; i < grid; ++i) {
    const double unobs_term = i == 0 ? 0.0 : static_cast<double>(i) * log_gamma_tilt;
    logw[i] = log_falling_factorial[i] + log_prior[i] + unobs_term;
    peak = std::max(peak, logw[i]);
  }
  if (peak == kNegInf) {
    throw ChainError("N step: all categorical weights vanished");
  }
  double total = 0.0;
  for (auto& w : logw) {
    w = std::exp(w - peak);
    total += w;
  }
  const double u = rng.u01() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    cum += logw[i];
    if (u < cum) return n + static_cast<int>(i);
  }
  return n + static_cast<int>(grid) - 1;
}

PosteriorDraws run_known_N(const ObservedSequence& data, int N, const EtaSpec& eta,
                           const McmcConfig& config) {
  if (N < data.n()) {
    throw std::invalid_argument("known N is below the number of observations");
  }
  return run_chains(data, nullptr, N, eta, config);
}

PosteriorDraws run_unknown_N(const ObservedSequence& data, const SizePrior& prior,
                             const EtaSpec& eta, const McmcConfig& config) {
  if (prior.n() != data.n()) {
    throw std::invalid_argument("prior grid starts at " + std::to_string(prior.n()) +
                                " but the data have n = " + std::to_string(data.n()));
  }
  return run_chains(data, &prior, 0, eta, config);
}

}  // namespace sspop
