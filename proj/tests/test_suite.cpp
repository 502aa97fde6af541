#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "skno/error.hpp"
#include "skno/suite.hpp"

using namespace skno;

TEST_CASE("data spec json round trip and hashing") {
  DataSpec s;
  s.benchmark = "burgers";
  s.samples = 3;
  s.resolution = 64;
  s.seed = 9;
  const DataSpec back = DataSpec::from_json(s.to_json());
  CHECK(back.hash() == s.hash());
  DataSpec other = s;
  other.seed = 10;
  CHECK(other.hash() != s.hash());
  CHECK_THROWS_AS(DataSpec::from_json(nlohmann::json{{"benchmark", "wave"}}), UsageError);
  CHECK_THROWS_AS(DataSpec::from_json(nlohmann::json{{"samples", 0}}), UsageError);
  CHECK_THROWS_AS(DataSpec::from_json(nlohmann::json{{"bogus", 1}}), UsageError);
  CHECK_THROWS_AS(DataSpec::from_json(nlohmann::json::array()), UsageError);
}

TEST_CASE("generated datasets follow the spec") {
  for (const std::string b : {"heat", "advection", "burgers", "darcy"}) {
    DataSpec s;
    s.benchmark = b;
    s.samples = 2;
    s.resolution = b == "darcy" ? 16 : 32;
    s.n_steps = 4;
    const Dataset ds = generate_dataset(s);
    CHECK(ds.count == 2);
    CHECK(ds.grid.resolution(0) == s.resolution);
    CHECK(ds.grid.dims() == (b == "darcy" ? 2 : 1));
    if (b == "advection") CHECK(ds.a_channels == 2);
    const Dataset again = generate_dataset(s);
    CHECK(again.a == ds.a);
    CHECK(again.u == ds.u);
  }
}

TEST_CASE("cached datasets are reused") {
  const auto dir = std::filesystem::temp_directory_path() / "skno_cache_test";
  std::filesystem::remove_all(dir);
  DataSpec s;
  s.samples = 2;
  s.resolution = 16;
  const Dataset first = cached_dataset(s, dir);
  CHECK(std::filesystem::exists(dir / ("heat_" + s.hash() + ".json")));
  const Dataset second = cached_dataset(s, dir);
  CHECK(second.a == first.a);
  CHECK(second.u == first.u);
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite row counts") {
  SuiteOptions opt;
  CHECK(suite_entries("heat_linear", opt).size() == 2);
  CHECK(suite_entries("advection_linear", opt).size() == 2);
  CHECK(suite_entries("burgers", opt).size() == 1);
  CHECK(suite_entries("darcy_ablation", opt).size() == 8);
  const auto pq = suite_entries("pq_variants", opt);
  CHECK(pq.size() == 10);
  std::set<std::string> hashes;
  for (const auto& e : pq) hashes.insert(e.config_hash());
  CHECK(hashes.size() == pq.size());
  CHECK_THROWS_AS(suite_entries("nope", opt), UsageError);
  opt.labels = {"missing"};
  CHECK_THROWS_AS(suite_entries("heat_linear", opt), UsageError);
  opt.labels = {"w.o. A along p"};
  const auto picked = suite_entries("heat_linear", opt);
  REQUIRE(picked.size() == 1);
  CHECK_FALSE(picked[0].arch.with_a_tilde);
}

TEST_CASE("darcy ablation rows differ from the baseline in one switch") {
  const auto rows = suite_entries("darcy_ablation", SuiteOptions{});
  const ArchConfig& base = rows[0].arch;
  CHECK(base.with_local_propagator);
  CHECK_FALSE(rows[6].arch.with_global_propagators);
  CHECK_FALSE(rows[7].arch.with_local_propagator);
  CHECK(rows[7].arch.global_layers() == base.global_layers());
  for (const auto& r : rows) CHECK(r.train_data.hash() == rows[0].train_data.hash());
}

TEST_CASE("smoke suite run is resumable") {
  SuiteOptions opt;
  opt.out_dir = std::filesystem::temp_directory_path() / "skno_suite_test";
  opt.smoke = true;
  std::filesystem::remove_all(opt.out_dir);
  const auto rows = run_experiment_suite("heat_linear", opt);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.suite == "heat_linear");
    CHECK(std::isfinite(r.final_rel_l2));
  }
  const auto entries = suite_entries("heat_linear", opt);
  CHECK(std::filesystem::exists(suite_run_dir(opt, "heat_linear", entries[0]) / "checkpoint" / "arch.json"));
  const auto again = run_experiment_suite("heat_linear", opt);
  REQUIRE(again.size() == 2);
  CHECK(again[0].wall_seconds == doctest::Approx(rows[0].wall_seconds));
  CHECK(read_suite_csv(opt.out_dir / "heat_linear.csv").size() == 2);
  std::filesystem::remove_all(opt.out_dir);
}
