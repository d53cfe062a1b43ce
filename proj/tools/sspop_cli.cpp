// Command-line front end: fit population-size models to recruitment data,
// simulate networks and RDS samples, run replication studies, re-summarize
// stored draws, and compute successive-sampling prevalence estimates.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sspop/engine.hpp"
#include "sspop/errors.hpp"
#include "sspop/io.hpp"
#include "sspop/parallel.hpp"
#include "sspop/priors.hpp"
#include "sspop/ssproc.hpp"
#include "sspop/studylab.hpp"
#include "sspop/summary.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sspop;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitChainFailure = 3;
constexpr int kExitIo = 4;

struct FitOptions {
  std::string data_path;
  std::string out_dir;
  std::string family = "cmp";
  // prior
  std::string prior_kind = "beta";
  double prior_alpha = 1.0;
  double prior_beta = 0.0;
  double prior_mode = 0.0;
  double prior_median = 0.0;
  double prior_mean = 0.0;
  double prior_lower_quartile = 0.0;
  int prior_l = 1;
  int prior_n_max = 0;
  // eta prior
  double eta_mu0 = 7.0;
  double eta_df_mean = 1.0;
  double eta_sigma0 = 3.0;
  double eta_df_sigma = 5.0;
  // mcmc
  int burn_in = 1000;
  int thin = 10;
  int n_draws = 2000;
  int chains = 1;
  double mu_scale = 0.0;
  double sigma_scale = 0.2;
  std::uint64_t seed = 1;
  int threads = 1;
  bool retain_sizes = false;
  double hpd_level = 0.95;
  int density_step = 1;

  json to_json() const {
    return json{{"data", data_path},
                {"out", out_dir},
                {"family", family},
                {"prior",
                 {{"kind", prior_kind},
                  {"alpha", prior_alpha},
                  {"beta", prior_beta},
                  {"mode", prior_mode},
                  {"median", prior_median},
                  {"mean", prior_mean},
                  {"lower_quartile", prior_lower_quartile},
                  {"l", prior_l},
                  {"n_max", prior_n_max}}},
                {"eta_prior",
                 {{"mu0", eta_mu0},
                  {"df_mean", eta_df_mean},
                  {"sigma0", eta_sigma0},
                  {"df_sigma", eta_df_sigma}}},
                {"mcmc",
                 {{"burn_in", burn_in},
                  {"thin", thin},
                  {"n_draws", n_draws},
                  {"chains", chains},
                  {"mu_proposal_scale", mu_scale},
                  {"sigma_log_proposal_scale", sigma_scale}}},
                {"seed", seed},
                {"threads", threads},
                {"retain_sizes", retain_sizes},
                {"hpd_level", hpd_level},
                {"density_step", density_step}};
  }

  void apply_json(const json& j) {
    data_path = j.value("data", data_path);
    out_dir = j.value("out", out_dir);
    family = j.value("family", family);
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      prior_kind = p.value("kind", prior_kind);
      prior_alpha = p.value("alpha", prior_alpha);
      prior_beta = p.value("beta", prior_beta);
      prior_mode = p.value("mode", prior_mode);
      prior_median = p.value("median", prior_median);
      prior_mean = p.value("mean", prior_mean);
      prior_lower_quartile = p.value("lower_quartile", prior_lower_quartile);
      prior_l = p.value("l", prior_l);
      prior_n_max = p.value("n_max", prior_n_max);
    }
    if (j.contains("eta_prior")) {
      const auto& e = j.at("eta_prior");
      eta_mu0 = e.value("mu0", eta_mu0);
      eta_df_mean = e.value("df_mean", eta_df_mean);
      eta_sigma0 = e.value("sigma0", eta_sigma0);
      eta_df_sigma = e.value("df_sigma", eta_df_sigma);
    }
    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      burn_in = m.value("burn_in", burn_in);
      thin = m.value("thin", thin);
      n_draws = m.value("n_draws", n_draws);
      chains = m.value("chains", chains);
      mu_scale = m.value("mu_proposal_scale", mu_scale);
      sigma_scale = m.value("sigma_log_proposal_scale", sigma_scale);
    }
    seed = j.value("seed", seed);
    threads = j.value("threads", threads);
    retain_sizes = j.value("retain_sizes", retain_sizes);
    hpd_level = j.value("hpd_level", hpd_level);
    density_step = j.value("density_step", density_step);
  }
};

// Builds the size prior from the fit options; elicitation targets win over a
// raw beta value. Returns the resolved (alpha, beta, n_max) for the manifest.
SizePrior build_prior(const FitOptions& opt, int n, json& resolved) {
  PriorSpec spec;
  if (opt.prior_kind == "flat") {
    spec.kind = SizePriorKind::kFlat;
  } else if (opt.prior_kind == "factorial") {
    spec.kind = SizePriorKind::kFactorial;
  } else if (opt.prior_kind == "beta") {
    spec.kind = SizePriorKind::kBetaProportion;
  } else {
    throw std::invalid_argument("unknown prior kind: " + opt.prior_kind);
  }
  spec.alpha = opt.prior_alpha;
  spec.beta = opt.prior_beta;
  spec.l = opt.prior_l;
  spec.n_max = opt.prior_n_max;
  if (opt.prior_mode > 0.0) spec.mode = opt.prior_mode;
  if (opt.prior_median > 0.0) spec.median = opt.prior_median;
  if (opt.prior_mean > 0.0) spec.mean = opt.prior_mean;
  if (opt.prior_lower_quartile > 0.0) spec.lower_quartile = opt.prior_lower_quartile;

  SizePrior prior = spec.build(n);
  resolved = json{{"kind", size_prior_kind_name(prior.kind())},
                  {"n", prior.n()},
                  {"n_max", prior.n_max()},
                  {"mode", prior.mode()},
                  {"median", prior.median()},
                  {"mean", prior.mean()}};
  if (prior.kind() == SizePriorKind::kBetaProportion) {
    resolved["alpha"] = prior.alpha();
    resolved["beta"] = prior.beta();
  }
  if (prior.kind() == SizePriorKind::kFactorial) resolved["l"] = prior.l();
  return prior;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const json& config, const json& resolved, const json& artifacts) {
  write_json(out_dir / "manifest.json", json{{"tool", "sspop"},
                                             {"version", kVersion},
                                             {"subcommand", subcommand},
                                             {"config", config},
                                             {"resolved", resolved},
                                             {"artifacts", artifacts}});
}

void ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw std::invalid_argument("--out directory is required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
}

int run_fit(const FitOptions& opt, bool show_config) {
  if (show_config) {
    std::cout << opt.to_json().dump(2) << "\n";
    return kExitOk;
  }
  ensure_out_dir(opt.out_dir);
  const fs::path out(opt.out_dir);

  const ObservedSequence data = load_recruitment_csv(opt.data_path);
  json resolved_prior;
  const SizePrior prior = build_prior(opt, data.n(), resolved_prior);

  McmcConfig config;
  config.burn_in = opt.burn_in;
  config.thin = opt.thin;
  config.n_draws = opt.n_draws;
  config.parallel_chains = opt.chains;
  config.seed = opt.seed;
  config.threads = opt.threads;
  config.mu_proposal_scale = opt.mu_scale;
  config.sigma_log_proposal_scale = opt.sigma_scale;
  config.retain_unobs_sizes = opt.retain_sizes;

  MhEtaSpec eta;
  eta.family = family_from_name(opt.family);
  eta.prior = EtaPrior{opt.eta_mu0, opt.eta_df_mean, opt.eta_sigma0, opt.eta_df_sigma};

  const PosteriorDraws draws = run_unknown_N(data, prior, eta, config);
  const DiscreteSummary summary = summarize(draws.N, opt.hpd_level);
  const SplitChainDiagnostic diag = split_chain_diagnostic(draws);

  write_draws_csv(out / "draws.csv", draws);
  json summary_json = summary_to_json(summary);
  summary_json["n_observed"] = data.n();
  summary_json["eta_acceptance"] = draws.eta_acceptance;
  summary_json["split_chain_discrepancy_z"] = diag.max_discrepancy_z;
  summary_json["split_chain_warning"] = diag.warn;
  write_json(out / "summary.json", summary_json);
  write_density_csv(out / "density.csv", density_table(prior, draws.N, opt.density_step));

  json artifacts{{"draws", "draws.csv"},
                 {"summary", "summary.json"},
                 {"density", "density.csv"}};
  if (opt.retain_sizes) {
    write_sizes_csv(out / "sizes.csv", draws);
    artifacts["sizes"] = "sizes.csv";
  }
  json resolved{{"prior", resolved_prior},
                {"eta_acceptance", draws.eta_acceptance},
                {"split_chain_warning", diag.warn}};
  write_manifest(out, "fit", opt.to_json(), resolved, artifacts);
  std::cout << "posterior mean " << summary.mean << ", " << opt.hpd_level * 100
            << "% HPD [" << summary.hpd_lo << ", " << summary.hpd_hi << "]\n";
  return kExitOk;
}

int run_simulate(const json& config) {
  const int N = config.value("population_size", 1000);
  const double prevalence = config.value("prevalence", 0.2);
  const double mean_degree = config.value("mean_degree", 7.0);
  const double omega = config.value("omega", 1.0);
  const double alpha_h = config.value("alpha_h", 1.0);
  const int n = config.value("sample_size", 500);
  const int num_seeds = config.value("num_seeds", 10);
  const int coupons = config.value("coupons", 2);
  const std::uint64_t seed = config.value("seed", 1);
  const std::string out_dir = config.value("out", std::string{});
  ensure_out_dir(out_dir);
  const fs::path out(out_dir);

  Rng rng(seed);
  const Network network =
      generate_network(N, prevalence, mean_degree, omega, alpha_h, rng);
  const RdsSample rds = simulate_rds(network, n, num_seeds, coupons, rng);

  std::vector<RecruitmentRecord> records;
  for (std::size_t i = 0; i < rds.nodes.size(); ++i) {
    RecruitmentRecord rec;
    rec.respondent_id = std::to_string(rds.nodes[i]);
    rec.recruiter_id =
        rds.recruiters[i] >= 0 ? std::to_string(rds.recruiters[i]) : std::string{};
    rec.degree = rds.seq.unit_sizes[i];
    rec.order = static_cast<int>(i) + 1;
    rec.trait = rds.seq.trait[i];
    records.push_back(std::move(rec));
  }
  write_recruitment_csv(out / "data.csv", records);

  json resolved{{"truncated", rds.truncated},
                {"waves", rds.waves},
                {"n_sampled", rds.seq.n()},
                {"population_size", N}};
  write_manifest(out, "simulate", config, resolved, json{{"data", "data.csv"}});
  std::cout << "sampled " << rds.seq.n() << " of " << N << " nodes in " << rds.waves
            << " waves" << (rds.truncated ? " (truncated)" : "") << "\n";
  return kExitOk;
}

int run_study(const std::string& design_path, const std::string& out_dir,
              int threads_override) {
  ensure_out_dir(out_dir);
  const fs::path out(out_dir);
  json design_json = read_json(design_path);
  if (design_json.contains("config")) design_json = design_json.at("config");
  StudyDesign design = design_from_json(design_json);
  if (threads_override > 0) design.threads = threads_override;

  const StudyReport report = run_replication_study(design);
  write_json(out / "report.json", report_to_json(report));
  write_replicates_csv(out / "replicates.csv", report);
  write_manifest(out, "study", design_to_json(design),
                 json{{"completed", report.aggregates.completed},
                      {"failures", report.aggregates.failures}},
                 json{{"report", "report.json"}, {"replicates", "replicates.csv"}});
  std::cout << "completed " << report.aggregates.completed << "/" << design.replicates
            << " replicates; mean ratio " << report.aggregates.mean_ratio
            << ", coverage " << report.aggregates.coverage << "\n";
  return kExitOk;
}

int run_summarize(const std::string& draws_path, double level,
                  const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const PosteriorDraws draws = load_draws_csv(draws_path);
  const DiscreteSummary summary = summarize(draws.N, level);
  const SplitChainDiagnostic diag = split_chain_diagnostic(draws);
  json summary_json = summary_to_json(summary);
  summary_json["split_chain_discrepancy_z"] = diag.max_discrepancy_z;
  summary_json["split_chain_warning"] = diag.warn;
  write_json(fs::path(out_dir) / "summary.json", summary_json);
  write_manifest(fs::path(out_dir), "summarize",
                 json{{"draws", draws_path}, {"level", level}, {"out", out_dir}},
                 json::object(), json{{"summary", "summary.json"}});
  std::cout << "posterior mean " << summary.mean << ", " << level * 100 << "% HPD ["
            << summary.hpd_lo << ", " << summary.hpd_hi << "]\n";
  return kExitOk;
}

int run_prevalence(const json& config) {
  const std::string data_path = config.at("data").get<std::string>();
  const std::string draws_path = config.at("draws").get<std::string>();
  const std::string sizes_path = config.value("sizes", std::string{});
  const std::string mode = config.value("mode", std::string("posterior"));
  const int n_sims = config.value("n_sims", 4000);
  const std::uint64_t seed = config.value("seed", 1);
  const int threads = config.value("threads", 1);
  const std::string out_dir = config.value("out", std::string{});
  ensure_out_dir(out_dir);

  const ObservedSequence data = load_recruitment_csv(data_path);
  if (!data.has_trait()) {
    throw std::invalid_argument("prevalence estimation needs a trait column");
  }
  const PosteriorDraws draws = load_draws_csv(draws_path);

  double estimate = 0.0;
  json resolved;
  if (mode == "posterior") {
    if (sizes_path.empty()) {
      throw std::invalid_argument(
          "posterior mode needs --sizes from a fit run with --retain-sizes");
    }
    const auto snapshots = load_sizes_csv(sizes_path);
    estimate = ss_prevalence_posterior(data, snapshots, n_sims, seed, threads);
    resolved = json{{"mode", "posterior"}, {"snapshots", snapshots.size()}};
  } else if (mode == "plugin") {
    const auto fitted = UnitSizeModel::from_moments(
        family_from_name(config.value("family", std::string("cmp"))), draws.mean_mu(),
        draws.mean_sigma());
    int N;
    if (config.contains("N")) {
      N = config.at("N").get<int>();
    } else {
      N = static_cast<int>(std::lround(draws.mean_N()));
    }
    N = std::max(N, data.n());
    estimate = ss_prevalence_plugin(data, fitted, N, n_sims, seed, threads);
    resolved = json{{"mode", "plugin"},
                    {"N", N},
                    {"eta_mean", draws.mean_mu()},
                    {"eta_sd", draws.mean_sigma()}};
  } else {
    throw std::invalid_argument("prevalence mode must be 'posterior' or 'plugin'");
  }

  double raw = 0.0;
  for (const auto t : data.trait) raw += t;
  raw /= data.n();
  resolved["raw_sample_proportion"] = raw;
  resolved["estimate"] = estimate;

  write_json(fs::path(out_dir) / "prevalence.json",
             json{{"estimate", estimate}, {"raw_sample_proportion", raw},
                  {"n_sims", n_sims}, {"mode", mode}});
  write_manifest(fs::path(out_dir), "prevalence", config, resolved,
                 json{{"prevalence", "prevalence.json"}});
  std::cout << "prevalence estimate " << estimate << " (raw proportion " << raw << ")\n";
  return kExitOk;
}

// Pulls --config <file> out of argv ahead of CLI11 so config values become
// defaults that explicit flags then override. A manifest from a previous run
// is accepted: its "config" object is used.
std::optional<json> preload_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      json j = read_json(argv[i + 1]);
      if (j.contains("config")) j = j.at("config");
      return j;
    }
  }
  return std::nullopt;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Population size estimation from recruitment-ordered network samples"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config (or a manifest from a previous run); flags override it")
      ->expected(1);

  // ---- fit ----
  FitOptions fit;
  bool show_config = false;
  if (const auto preloaded = preload_config(argc, argv)) fit.apply_json(*preloaded);
  auto* fit_cmd = app.add_subcommand("fit", "fit the unknown-N model to recruitment data");
  fit_cmd->add_option("--data", fit.data_path, "recruitment CSV");
  fit_cmd->add_option("--out", fit.out_dir, "output directory");
  fit_cmd->add_option("--family", fit.family, "unit size family: cmp|ztpoisson|ztnegbinomial");
  fit_cmd->add_option("--prior.kind", fit.prior_kind, "flat|factorial|beta");
  fit_cmd->add_option("--prior.alpha", fit.prior_alpha, "beta prior alpha");
  fit_cmd->add_option("--prior.beta", fit.prior_beta, "beta prior beta (direct)");
  fit_cmd->add_option("--prior.mode", fit.prior_mode, "elicit beta from the prior mode");
  fit_cmd->add_option("--prior.median", fit.prior_median, "elicit beta from the prior median");
  fit_cmd->add_option("--prior.mean", fit.prior_mean,
                      "prior mean target (grid-calibrated, or with --prior.lower_quartile "
                      "solves alpha and beta)");
  fit_cmd->add_option("--prior.lower_quartile", fit.prior_lower_quartile,
                      "prior lower quartile target (with --prior.mean)");
  fit_cmd->add_option("--prior.l", fit.prior_l, "factorial prior l");
  fit_cmd->add_option("--prior.n_max", fit.prior_n_max, "grid upper bound (0 = rule)");
  fit_cmd->add_option("--eta.mu0", fit.eta_mu0, "prior mean of the size-model mean");
  fit_cmd->add_option("--eta.df_mean", fit.eta_df_mean, "equivalent sample size for the mean");
  fit_cmd->add_option("--eta.sigma0", fit.eta_sigma0, "prior scale of the size-model sd");
  fit_cmd->add_option("--eta.df_sigma", fit.eta_df_sigma, "degrees of freedom for the sd");
  fit_cmd->add_option("--mcmc.burn_in", fit.burn_in, "burn-in iterations");
  fit_cmd->add_option("--mcmc.thin", fit.thin, "thinning interval");
  fit_cmd->add_option("--mcmc.n_draws", fit.n_draws, "retained draws per chain");
  fit_cmd->add_option("--mcmc.chains", fit.chains, "parallel chains");
  fit_cmd->add_option("--mcmc.mu_proposal_scale", fit.mu_scale,
                      "random-walk scale for the mean (0 = 0.1 * sigma0)");
  fit_cmd->add_option("--mcmc.sigma_log_proposal_scale", fit.sigma_scale,
                      "log-scale proposal sd for the sd");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_option("--threads", fit.threads, "threads for parallel chains");
  fit_cmd->add_flag("--retain-sizes", fit.retain_sizes,
                    "write posterior snapshots of unobserved sizes");
  fit_cmd->add_option("--hpd-level", fit.hpd_level, "credible level");
  fit_cmd->add_option("--density-step", fit.density_step, "density table bucket width");
  fit_cmd->add_flag("--show-config", show_config, "print the merged config and exit");

  // ---- simulate ----
  json sim = json::object();
  if (const auto preloaded = preload_config(argc, argv)) sim = *preloaded;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a network and an RDS sample");
  int sim_N = sim.value("population_size", 1000);
  double sim_prev = sim.value("prevalence", 0.2);
  double sim_deg = sim.value("mean_degree", 7.0);
  double sim_omega = sim.value("omega", 1.0);
  double sim_alpha = sim.value("alpha_h", 1.0);
  int sim_n = sim.value("sample_size", 500);
  int sim_seeds = sim.value("num_seeds", 10);
  int sim_coupons = sim.value("coupons", 2);
  std::uint64_t sim_seed = sim.value("seed", 1);
  std::string sim_out = sim.value("out", std::string{});
  sim_cmd->add_option("--population-size", sim_N, "number of nodes");
  sim_cmd->add_option("--prevalence", sim_prev, "infected fraction");
  sim_cmd->add_option("--mean-degree", sim_deg, "target mean degree");
  sim_cmd->add_option("--omega", sim_omega, "differential activity ratio");
  sim_cmd->add_option("--alpha-h", sim_alpha, "homophily factor");
  sim_cmd->add_option("--sample-size", sim_n, "target sample size");
  sim_cmd->add_option("--num-seeds", sim_seeds, "seed respondents");
  sim_cmd->add_option("--coupons", sim_coupons, "coupons per respondent");
  sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--out", sim_out, "output directory");

  // ---- study ----
  std::string study_design, study_out;
  int study_threads = 0;
  auto* study_cmd = app.add_subcommand("study", "run a replication study from a design JSON");
  study_cmd->add_option("--design", study_design, "design JSON")->required();
  study_cmd->add_option("--out", study_out, "output directory")->required();
  study_cmd->add_option("--threads", study_threads, "override design thread count");

  // ---- summarize ----
  std::string summ_draws, summ_out;
  double summ_level = 0.95;
  auto* summ_cmd = app.add_subcommand("summarize", "re-summarize stored draws");
  summ_cmd->add_option("--draws", summ_draws, "draws CSV from a fit run")->required();
  summ_cmd->add_option("--level", summ_level, "credible level");
  summ_cmd->add_option("--out", summ_out, "output directory")->required();

  // ---- prevalence ----
  json prev = json::object();
  if (const auto preloaded = preload_config(argc, argv)) prev = *preloaded;
  auto* prev_cmd =
      app.add_subcommand("prevalence", "successive-sampling prevalence estimate");
  std::string prev_data = prev.value("data", std::string{});
  std::string prev_draws = prev.value("draws", std::string{});
  std::string prev_sizes = prev.value("sizes", std::string{});
  std::string prev_mode = prev.value("mode", std::string("posterior"));
  std::string prev_family = prev.value("family", std::string("cmp"));
  int prev_sims = prev.value("n_sims", 4000);
  int prev_N = prev.value("N", 0);
  std::uint64_t prev_seed = prev.value("seed", 1);
  int prev_threads = prev.value("threads", 1);
  std::string prev_out = prev.value("out", std::string{});
  prev_cmd->add_option("--data", prev_data, "recruitment CSV with a trait column");
  prev_cmd->add_option("--draws", prev_draws, "draws CSV from a fit run");
  prev_cmd->add_option("--sizes", prev_sizes, "sizes CSV (posterior mode)");
  prev_cmd->add_option("--mode", prev_mode, "posterior|plugin");
  prev_cmd->add_option("--family", prev_family, "unit size family for plugin fills");
  prev_cmd->add_option("--n-sims", prev_sims, "inclusion-probability simulations");
  prev_cmd->add_option("--N", prev_N, "plugin population size (0 = posterior mean)");
  prev_cmd->add_option("--seed", prev_seed, "RNG seed");
  prev_cmd->add_option("--threads", prev_threads, "simulation threads");
  prev_cmd->add_option("--out", prev_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  }

  if (fit_cmd->parsed()) {
    if (!show_config && fit.data_path.empty()) {
      throw std::invalid_argument("--data is required");
    }
    return run_fit(fit, show_config);
  }
  if (sim_cmd->parsed()) {
    json config{{"population_size", sim_N}, {"prevalence", sim_prev},
                {"mean_degree", sim_deg},   {"omega", sim_omega},
                {"alpha_h", sim_alpha},     {"sample_size", sim_n},
                {"num_seeds", sim_seeds},   {"coupons", sim_coupons},
                {"seed", sim_seed},         {"out", sim_out}};
    return run_simulate(config);
  }
  if (study_cmd->parsed()) return run_study(study_design, study_out, study_threads);
  if (summ_cmd->parsed()) return run_summarize(summ_draws, summ_level, summ_out);
  if (prev_cmd->parsed()) {
    json config{{"data", prev_data}, {"draws", prev_draws}, {"mode", prev_mode},
                {"family", prev_family}, {"n_sims", prev_sims}, {"seed", prev_seed},
                {"threads", prev_threads}, {"out", prev_out}};
    if (!prev_sizes.empty()) config["sizes"] = prev_sizes;
    if (prev_N > 0) config["N"] = prev_N;
    return run_prevalence(config);
  }
  return kExitOk;
}

int error_exit(const char* type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}
                   .dump()
            << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    return error_exit("cli", e.what(), kExitValidation);
  } catch (const ChainError& e) {
    return error_exit("chain_failure", e.what(), kExitChainFailure);
  } catch (const IoError& e) {
    return error_exit("io", e.what(), kExitIo);
  } catch (const ParseError& e) {
    return error_exit("parse", e.what(), kExitValidation);
  } catch (const ElicitationError& e) {
    return error_exit("elicitation", e.what(), kExitValidation);
  } catch (const FeasibilityError& e) {
    return error_exit("feasibility", e.what(), kExitValidation);
  } catch (const std::invalid_argument& e) {
    return error_exit("validation", e.what(), kExitValidation);
  } catch (const std::exception& e) {
    return error_exit("internal", e.what(), kExitChainFailure);
  }
}
