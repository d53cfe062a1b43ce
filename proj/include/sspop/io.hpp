#ifndef SSPOP_IO_HPP
#define SSPOP_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sspop/data.hpp"
#include "sspop/engine.hpp"
#include "sspop/priors.hpp"
#include "sspop/studylab.hpp"
#include "sspop/summary.hpp"

namespace sspop {

// One row of a recruitment CSV (schema:
// respondent_id,recruiter_id,degree,order[,trait]); seeds carry an empty
// recruiter_id. Order values must form a permutation of 1..n.
struct RecruitmentRecord {
  std::string respondent_id;
  std::string recruiter_id;
  int degree = 0;
  int order = 0;
  int trait = -1;  // -1 = absent
};

std::vector<RecruitmentRecord> load_recruitment_records(const std::filesystem::path& path);
ObservedSequence load_recruitment_csv(const std::filesystem::path& path);
void write_recruitment_csv(const std::filesystem::path& path,
                           const std::vector<RecruitmentRecord>& records);

// Draws table: header iteration,chain,N,mu,sigma. Floats are written with
// round-trip precision so re-runs are byte-identical.
void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws load_draws_csv(const std::filesystem::path& path);

// Retained posterior snapshots of unobserved sizes, one histogram per draw:
// header draw,size,count.
void write_sizes_csv(const std::filesystem::path& path, const PosteriorDraws& draws);
std::vector<std::vector<int>> load_sizes_csv(const std::filesystem::path& path);

// Prior/posterior density table: header N,prior_mass,posterior_mass.
void write_density_csv(const std::filesystem::path& path,
                       const std::vector<DensityRow>& rows);

// Per-replicate study table.
void write_replicates_csv(const std::filesystem::path& path, const StudyReport& report);

nlohmann::json summary_to_json(const DiscreteSummary& summary);
nlohmann::json report_to_json(const StudyReport& report);

StudyDesign design_from_json(const nlohmann::json& j);
nlohmann::json design_to_json(const StudyDesign& design);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace sspop

#endif
