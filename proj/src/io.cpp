#include "sspop/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sspop/errors.hpp"

namespace sspop {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

int parse_int(const std::string& s, const char* what, long line) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line);
  }
}

double parse_double(const std::string& s, const char* what, long line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<RecruitmentRecord> load_recruitment_records(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path.string(), 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  std::map<std::string, int> columns;
  for (std::size_t i = 0; i < header.size(); ++i) columns[header[i]] = static_cast<int>(i);
  for (const char* required : {"respondent_id", "recruiter_id", "degree", "order"}) {
    if (!columns.count(required)) {
      throw ParseError(std::string("missing required column '") + required + "'", 1);
    }
  }
  const bool has_trait = columns.count("trait") > 0;

  std::vector<RecruitmentRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    RecruitmentRecord rec;
    rec.respondent_id = fields[columns.at("respondent_id")];
    rec.recruiter_id = fields[columns.at("recruiter_id")];
    rec.degree = parse_int(fields[columns.at("degree")], "degree", line_no);
    rec.order = parse_int(fields[columns.at("order")], "order", line_no);
    if (rec.degree < 1) throw ParseError("degree must be >= 1", line_no);
    if (has_trait) {
      const std::string& t = fields[columns.at("trait")];
      rec.trait = parse_int(t, "trait", line_no);
      if (rec.trait != 0 && rec.trait != 1) {
        throw ParseError("trait must be 0 or 1", line_no);
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError("no data rows in " + path.string(), line_no);

  // order values must form a permutation of 1..n
  std::vector<char> seen(records.size() + 1, 0);
  long data_line = 1;
  for (const auto& rec : records) {
    ++data_line;
    if (rec.order < 1 || rec.order > static_cast<int>(records.size())) {
      throw ParseError("order " + std::to_string(rec.order) + " outside 1.." +
                           std::to_string(records.size()),
                       data_line);
    }
    if (seen[rec.order]) {
      throw ParseError("duplicate order value " + std::to_string(rec.order), data_line);
    }
    seen[rec.order] = 1;
  }
  return records;
}

ObservedSequence load_recruitment_csv(const std::filesystem::path& path) {
  auto records = load_recruitment_records(path);
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.order < b.order; });
  ObservedSequence seq;
  const bool has_trait =
      std::all_of(records.begin(), records.end(), [](const auto& r) { return r.trait >= 0; });
  for (const auto& rec : records) {
    seq.unit_sizes.push_back(rec.degree);
    if (has_trait) seq.trait.push_back(static_cast<std::uint8_t>(rec.trait));
  }
  seq.validate();
  return seq;
}

void write_recruitment_csv(const std::filesystem::path& path,
                           const std::vector<RecruitmentRecord>& records) {
  std::ofstream out = open_output(path);
  const bool has_trait =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.trait >= 0; });
  out << "respondent_id,recruiter_id,degree,order";
  if (has_trait) out << ",trait";
  out << "\n";
  for (const auto& rec : records) {
    out << rec.respondent_id << ',' << rec.recruiter_id << ',' << rec.degree << ','
        << rec.order;
    if (has_trait) out << ',' << rec.trait;
    out << "\n";
  }
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws) {
  std::ofstream out = open_output(path);
  out << "iteration,chain,N,mu,sigma\n";
  for (std::size_t i = 0; i < draws.size(); ++i) {
    out << draws.iteration[i] << ',' << draws.chain[i] << ',' << draws.N[i] << ','
        << format_double(draws.mu[i]) << ',' << format_double(draws.sigma[i]) << "\n";
  }
}

PosteriorDraws load_draws_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty draws file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != std::vector<std::string>{"iteration", "chain", "N", "mu", "sigma"}) {
    throw ParseError("unexpected draws header: " + line, 1);
  }
  PosteriorDraws draws;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw ParseError("expected 5 fields", line_no);
    draws.iteration.push_back(parse_int(f[0], "iteration", line_no));
    draws.chain.push_back(parse_int(f[1], "chain", line_no));
    draws.N.push_back(parse_int(f[2], "N", line_no));
    draws.mu.push_back(parse_double(f[3], "mu", line_no));
    draws.sigma.push_back(parse_double(f[4], "sigma", line_no));
  }
  if (draws.size() == 0) throw ParseError("no draws in " + path.string(), line_no);
  return draws;
}

void write_sizes_csv(const std::filesystem::path& path, const PosteriorDraws& draws) {
  std::ofstream out = open_output(path);
  out << "draw,size,count\n";
  for (std::size_t d = 0; d < draws.unobs_sizes.size(); ++d) {
    std::map<int, long> hist;
    for (const int u : draws.unobs_sizes[d]) ++hist[u];
    for (const auto& [size, count] : hist) {
      out << d << ',' << size << ',' << count << "\n";
    }
  }
}

std::vector<std::vector<int>> load_sizes_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty sizes file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != std::vector<std::string>{"draw", "size", "count"}) {
    throw ParseError("unexpected sizes header: " + line, 1);
  }
  std::vector<std::vector<int>> snapshots;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw ParseError("expected 3 fields", line_no);
    const int draw = parse_int(f[0], "draw", line_no);
    const int size = parse_int(f[1], "size", line_no);
    const long count = parse_int(f[2], "count", line_no);
    if (draw < 0) throw ParseError("negative draw index", line_no);
    if (static_cast<std::size_t>(draw) >= snapshots.size()) snapshots.resize(draw + 1);
    for (long c = 0; c < count; ++c) snapshots[draw].push_back(size);
  }
  return snapshots;
}

void write_density_csv(const std::filesystem::path& path,
                       const std::vector<DensityRow>& rows) {
  std::ofstream out = open_output(path);
  out << "N,prior_mass,posterior_mass\n";
  for (const auto& r : rows) {
    out << r.value << ',' << format_double(r.prior_mass) << ','
        << format_double(r.posterior_mass) << "\n";
  }
}

void write_replicates_csv(const std::filesystem::path& path, const StudyReport& report) {
  std::ofstream out = open_output(path);
  out << "replicate,ok,truncated,waves,n_observed,truth,posterior_mean,ratio,hpd_lo,"
         "hpd_hi,covered,upper_ratio,eta_acceptance,true_prevalence,prev_raw,"
         "prev_ss_posterior_mean_n,prev_ss_prior_mean_n,prev_ss_true_n,error\n";
  for (const auto& r : report.replicates) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << r.replicate << ',' << (r.ok ? 1 : 0) << ',' << (r.truncated ? 1 : 0) << ','
        << r.waves << ',' << r.n_observed << ',' << r.truth << ','
        << format_double(r.posterior_mean) << ',' << format_double(r.ratio) << ','
        << r.hpd_lo << ',' << r.hpd_hi << ',' << (r.covered ? 1 : 0) << ','
        << format_double(r.upper_ratio) << ',' << format_double(r.eta_acceptance) << ','
        << format_double(r.true_prevalence) << ',' << format_double(r.prev_raw) << ','
        << format_double(r.prev_ss_posterior_mean_n) << ','
        << format_double(r.prev_ss_prior_mean_n) << ','
        << format_double(r.prev_ss_true_n) << ',' << err << "\n";
  }
}

nlohmann::json summary_to_json(const DiscreteSummary& summary) {
  return nlohmann::json{{"mean", summary.mean},
                        {"median", summary.median},
                        {"mode", summary.mode},
                        {"hpd_level", summary.hpd_level},
                        {"hpd_lower", summary.hpd_lo},
                        {"hpd_upper", summary.hpd_hi},
                        {"hpd_set_size", summary.hpd_set.size()},
                        {"mass_captured", summary.mass_captured}};
}

nlohmann::json report_to_json(const StudyReport& report) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : report.replicates) {
    reps.push_back({{"replicate", r.replicate},
                    {"ok", r.ok},
                    {"truncated", r.truncated},
                    {"waves", r.waves},
                    {"n_observed", r.n_observed},
                    {"posterior_mean", r.posterior_mean},
                    {"ratio", r.ratio},
                    {"hpd_lo", r.hpd_lo},
                    {"hpd_hi", r.hpd_hi},
                    {"covered", r.covered},
                    {"upper_ratio", r.upper_ratio},
                    {"error", r.error}});
  }
  return nlohmann::json{
      {"aggregates",
       {{"completed", report.aggregates.completed},
        {"failures", report.aggregates.failures},
        {"truncated", report.aggregates.truncated},
        {"mean_ratio", report.aggregates.mean_ratio},
        {"coverage", report.aggregates.coverage},
        {"coverage_full_only", report.aggregates.coverage_full_only},
        {"median_upper_ratio", report.aggregates.median_upper_ratio}}},
      {"notes", report.notes},
      {"replicates", reps}};
}

StudyDesign design_from_json(const nlohmann::json& j) {
  StudyDesign d;
  d.population_size = j.value("population_size", d.population_size);
  d.prevalence = j.value("prevalence", d.prevalence);
  d.mean_degree = j.value("mean_degree", d.mean_degree);
  d.size_sd = j.value("size_sd", d.size_sd);
  d.omega = j.value("omega", d.omega);
  d.alpha_h = j.value("alpha_h", d.alpha_h);
  d.sample_size = j.value("sample_size", d.sample_size);
  d.num_seeds = j.value("num_seeds", d.num_seeds);
  d.coupons = j.value("coupons", d.coupons);
  d.replicates = j.value("replicates", d.replicates);
  d.master_seed = j.value("master_seed", d.master_seed);
  d.threads = j.value("threads", d.threads);
  d.estimate_prevalence = j.value("estimate_prevalence", d.estimate_prevalence);
  d.prevalence_sims = j.value("prevalence_sims", d.prevalence_sims);
  d.hpd_level = j.value("hpd_level", d.hpd_level);

  const std::string pop = j.value("population", std::string("model_sizes"));
  if (pop == "block_network") {
    d.population = StudyDesign::Population::kBlockNetwork;
  } else if (pop == "model_sizes") {
    d.population = StudyDesign::Population::kModelSizes;
  } else {
    throw std::invalid_argument("unknown population kind: " + pop);
  }
  const std::string arm = j.value("arm", std::string("ppswor"));
  if (arm == "rds") {
    d.arm = StudyDesign::Arm::kRds;
  } else if (arm == "ppswor") {
    d.arm = StudyDesign::Arm::kPpswor;
  } else {
    throw std::invalid_argument("unknown sampling arm: " + arm);
  }
  d.fit_family = family_from_name(j.value("fit_family", std::string("cmp")));

  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    const std::string kind = p.value("kind", std::string("beta"));
    if (kind == "flat") {
      d.prior.kind = SizePriorKind::kFlat;
    } else if (kind == "factorial") {
      d.prior.kind = SizePriorKind::kFactorial;
    } else if (kind == "beta") {
      d.prior.kind = SizePriorKind::kBetaProportion;
    } else {
      throw std::invalid_argument("unknown prior kind: " + kind);
    }
    d.prior.alpha = p.value("alpha", d.prior.alpha);
    d.prior.beta = p.value("beta", d.prior.beta);
    d.prior.l = p.value("l", d.prior.l);
    d.prior.n_max = p.value("n_max", d.prior.n_max);
    if (p.contains("mode")) d.prior.mode = p.at("mode").get<double>();
    if (p.contains("median")) d.prior.median = p.at("median").get<double>();
    if (p.contains("mean")) d.prior.mean = p.at("mean").get<double>();
    if (p.contains("lower_quartile")) {
      d.prior.lower_quartile = p.at("lower_quartile").get<double>();
    }
  }
  if (j.contains("eta_prior")) {
    const auto& e = j.at("eta_prior");
    d.eta_prior.mu0 = e.value("mu0", d.eta_prior.mu0);
    d.eta_prior.df_mean = e.value("df_mean", d.eta_prior.df_mean);
    d.eta_prior.sigma0 = e.value("sigma0", d.eta_prior.sigma0);
    d.eta_prior.df_sigma = e.value("df_sigma", d.eta_prior.df_sigma);
  }
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    d.mcmc.burn_in = m.value("burn_in", d.mcmc.burn_in);
    d.mcmc.thin = m.value("thin", d.mcmc.thin);
    d.mcmc.n_draws = m.value("n_draws", d.mcmc.n_draws);
    d.mcmc.parallel_chains = m.value("parallel_chains", d.mcmc.parallel_chains);
    d.mcmc.mu_proposal_scale = m.value("mu_proposal_scale", d.mcmc.mu_proposal_scale);
    d.mcmc.sigma_log_proposal_scale =
        m.value("sigma_log_proposal_scale", d.mcmc.sigma_log_proposal_scale);
  }
  return d;
}

nlohmann::json design_to_json(const StudyDesign& d) {
  nlohmann::json prior{{"kind", size_prior_kind_name(d.prior.kind)},
                       {"alpha", d.prior.alpha},
                       {"beta", d.prior.beta},
                       {"l", d.prior.l},
                       {"n_max", d.prior.n_max}};
  if (d.prior.mode) prior["mode"] = *d.prior.mode;
  if (d.prior.median) prior["median"] = *d.prior.median;
  if (d.prior.mean) prior["mean"] = *d.prior.mean;
  if (d.prior.lower_quartile) prior["lower_quartile"] = *d.prior.lower_quartile;

  return nlohmann::json{
      {"population_size", d.population_size},
      {"prevalence", d.prevalence},
      {"mean_degree", d.mean_degree},
      {"size_sd", d.size_sd},
      {"omega", d.omega},
      {"alpha_h", d.alpha_h},
      {"sample_size", d.sample_size},
      {"num_seeds", d.num_seeds},
      {"coupons", d.coupons},
      {"replicates", d.replicates},
      {"population",
       d.population == StudyDesign::Population::kBlockNetwork ? "block_network"
                                                              : "model_sizes"},
      {"arm", d.arm == StudyDesign::Arm::kRds ? "rds" : "ppswor"},
      {"fit_family", family_name(d.fit_family)},
      {"prior", prior},
      {"eta_prior",
       {{"mu0", d.eta_prior.mu0},
        {"df_mean", d.eta_prior.df_mean},
        {"sigma0", d.eta_prior.sigma0},
        {"df_sigma", d.eta_prior.df_sigma}}},
      {"mcmc",
       {{"burn_in", d.mcmc.burn_in},
        {"thin", d.mcmc.thin},
        {"n_draws", d.mcmc.n_draws},
        {"parallel_chains", d.mcmc.parallel_chains},
        {"mu_proposal_scale", d.mcmc.mu_proposal_scale},
        {"sigma_log_proposal_scale", d.mcmc.sigma_log_proposal_scale}}},
      {"master_seed", d.master_seed},
      {"threads", d.threads},
      {"estimate_prevalence", d.estimate_prevalence},
      {"prevalence_sims", d.prevalence_sims},
      {"hpd_level", d.hpd_level}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace sspop
