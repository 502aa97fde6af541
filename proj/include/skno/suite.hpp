#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skno/arch.hpp"
#include "skno/dataset.hpp"
#include "skno/oracle.hpp"
#include "skno/train.hpp"

namespace skno {

/// Recipe for a generated dataset.
struct DataSpec {
  std::string benchmark = "heat";  // heat | advection | burgers | darcy
  int samples = 10;
  int resolution = 128;            // per axis
  std::uint64_t seed = 0;
  OracleConfig oracle;
  int n_steps = 20;                // advection trajectory length

  void validate() const;
  nlohmann::json to_json() const;
  static DataSpec from_json(const nlohmann::json& j);
  std::string hash() const;
};

Dataset generate_dataset(const DataSpec& spec, int threads = 1);
/// Loads `<cache_dir>/<benchmark>_<hash>` when present, otherwise generates and stores it.
Dataset cached_dataset(const DataSpec& spec, const std::filesystem::path& cache_dir, int threads = 1);

struct SuiteEntry {
  std::string label;
  ArchConfig arch;
  TrainConfig train;
  DataSpec train_data;
  DataSpec test_data;
  std::string config_hash() const;
};

struct SuiteOptions {
  std::filesystem::path out_dir = "runs";
  std::uint64_t seed = 0;
  int threads = 1;
  bool smoke = false;               // tiny data and one epoch, for plumbing checks
  std::vector<std::string> labels;  // run only these rows when non-empty
};

/// heat_linear | advection_linear | burgers | darcy_ablation | pq_variants
std::vector<std::string> suite_names();
std::vector<SuiteEntry> suite_entries(const std::string& suite, const SuiteOptions& opt);

struct SuiteRow {
  std::string suite;
  std::string config_hash;
  std::string arch_summary;
  double final_rel_l2 = 0.0;
  double wall_seconds = 0.0;
};

/// Runs every entry not already recorded (by config hash) in `<out_dir>/<suite>.csv`, appending
/// one row per finished entry. Each entry's checkpoint and metrics go to `<out_dir>/<suite>/<hash>/`.
/// Returns all rows of the suite file after the run.
std::vector<SuiteRow> run_experiment_suite(const std::string& suite, const SuiteOptions& opt);

std::vector<SuiteRow> read_suite_csv(const std::filesystem::path& path);
std::string suite_csv(const std::vector<SuiteRow>& rows);

/// Directory holding the checkpoint and metrics of `entry` for `suite`.
std::filesystem::path suite_run_dir(const SuiteOptions& opt, const std::string& suite, const SuiteEntry& entry);

}  // namespace skno
