#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sspop/errors.hpp"
#include "sspop/io.hpp"

using namespace sspop;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sspop_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

TEST_CASE("recruitment csv loading") {
  TempDir tmp;
  const fs::path file = tmp.path / "data.csv";

  SUBCASE("well-formed file in shuffled order") {
    write_file(file,
               "respondent_id,recruiter_id,degree,order,trait\n"
               "b,a,4,2,1\n"
               "c,a,2,3,0\n"
               "a,,7,1,1\n");
    const auto seq = load_recruitment_csv(file);
    CHECK(seq.n() == 3);
    CHECK(seq.unit_sizes == std::vector<int>{7, 4, 2});
    CHECK(seq.trait == std::vector<std::uint8_t>{1, 1, 0});
  }
  SUBCASE("trait column is optional") {
    write_file(file,
               "respondent_id,recruiter_id,degree,order\n"
               "a,,7,1\n"
               "b,a,4,2\n");
    const auto seq = load_recruitment_csv(file);
    CHECK(seq.n() == 2);
    CHECK_FALSE(seq.has_trait());
  }
  SUBCASE("zero degree is rejected with its line number") {
    write_file(file,
               "respondent_id,recruiter_id,degree,order\n"
               "a,,7,1\n"
               "b,a,4,2\n"
               "c,a,5,3\n"
               "d,b,6,4\n"
               "e,b,1,5\n"
               "f,c,0,6\n");
    try {
      load_recruitment_csv(file);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line_number == 7);
      CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
  }
  SUBCASE("duplicate order values are rejected") {
    write_file(file,
               "respondent_id,recruiter_id,degree,order\n"
               "a,,7,1\n"
               "b,a,4,1\n");
    CHECK_THROWS_AS(load_recruitment_csv(file), ParseError);
  }
  SUBCASE("missing column is rejected") {
    write_file(file, "respondent_id,degree,order\na,7,1\n");
    CHECK_THROWS_AS(load_recruitment_csv(file), ParseError);
  }
  SUBCASE("missing file raises an io error") {
    CHECK_THROWS_AS(load_recruitment_csv(tmp.path / "nope.csv"), IoError);
  }
  SUBCASE("round trip") {
    std::vector<RecruitmentRecord> records{{"s1", "", 9, 1, 1},
                                           {"r2", "s1", 3, 2, 0},
                                           {"r3", "s1", 5, 3, 1}};
    write_recruitment_csv(file, records);
    const auto seq = load_recruitment_csv(file);
    CHECK(seq.unit_sizes == std::vector<int>{9, 3, 5});
    CHECK(seq.trait == std::vector<std::uint8_t>{1, 0, 1});
    const auto loaded = load_recruitment_records(file);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].respondent_id == "s1");
    CHECK(loaded[1].recruiter_id == "s1");
  }
}

TEST_CASE("draws csv round trip") {
  TempDir tmp;
  PosteriorDraws draws;
  for (int i = 0; i < 50; ++i) {
    draws.iteration.push_back(10 * (i + 1));
    draws.chain.push_back(i % 2);
    draws.N.push_back(100 + i);
    draws.mu.push_back(7.0 + 0.01 * i);
    draws.sigma.push_back(3.0 / (1 + i));
  }
  const fs::path file = tmp.path / "draws.csv";
  write_draws_csv(file, draws);
  const auto loaded = load_draws_csv(file);
  CHECK(loaded.N == draws.N);
  CHECK(loaded.chain == draws.chain);
  CHECK(loaded.mu == draws.mu);  // %.17g is bit round-trip safe
  CHECK(loaded.sigma == draws.sigma);
}

TEST_CASE("sizes csv round trip preserves histograms") {
  TempDir tmp;
  PosteriorDraws draws;
  draws.unobs_sizes = {{3, 3, 7, 1}, {2}, {5, 5, 5}};
  const fs::path file = tmp.path / "sizes.csv";
  write_sizes_csv(file, draws);
  const auto snapshots = load_sizes_csv(file);
  REQUIRE(snapshots.size() == 3);
  CHECK(snapshots[0] == std::vector<int>{1, 3, 3, 7});  // histogram order
  CHECK(snapshots[1] == std::vector<int>{2});
  CHECK(snapshots[2] == std::vector<int>{5, 5, 5});
}

TEST_CASE("study design json round trip") {
  StudyDesign d;
  d.population_size = 444;
  d.prevalence = 0.25;
  d.omega = 2.0;
  d.alpha_h = 1.8;
  d.arm = StudyDesign::Arm::kRds;
  d.population = StudyDesign::Population::kBlockNetwork;
  d.prior.kind = SizePriorKind::kBetaProportion;
  d.prior.mean = 444.0;
  d.prior.n_max = 2000;
  d.mcmc.burn_in = 123;
  d.master_seed = 99;

  const auto j = design_to_json(d);
  const auto back = design_from_json(j);
  CHECK(back.population_size == 444);
  CHECK(back.prevalence == 0.25);
  CHECK(back.omega == 2.0);
  CHECK(back.arm == StudyDesign::Arm::kRds);
  CHECK(back.population == StudyDesign::Population::kBlockNetwork);
  CHECK(back.prior.mean.has_value());
  CHECK(*back.prior.mean == 444.0);
  CHECK(back.prior.n_max == 2000);
  CHECK(back.mcmc.burn_in == 123);
  CHECK(back.master_seed == 99);

  CHECK_THROWS_AS(design_from_json({{"arm", "teleport"}}), std::invalid_argument);
}

TEST_CASE("json files") {
  TempDir tmp;
  const fs::path file = tmp.path / "x.json";
  write_json(file, {{"a", 1}, {"b", "two"}});
  const auto j = read_json(file);
  CHECK(j.at("a") == 1);
  CHECK(j.at("b") == "two");
  write_file(tmp.path / "bad.json", "{nope");
  CHECK_THROWS_AS(read_json(tmp.path / "bad.json"), ParseError);
  CHECK_THROWS_AS(read_json(tmp.path / "absent.json"), IoError);
}
