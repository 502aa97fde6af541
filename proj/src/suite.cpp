#include "skno/suite.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "skno/error.hpp"
#include "skno/generators.hpp"
#include "skno/skt_io.hpp"

namespace skno {

namespace fs = std::filesystem;

void DataSpec::validate() const {
  if (benchmark != "heat" && benchmark != "advection" && benchmark != "burgers" && benchmark != "darcy")
    throw UsageError("unknown benchmark '" + benchmark + "' (expected heat, advection, burgers or darcy)");
  if (samples < 1) throw UsageError("samples must be >= 1");
  if (resolution < 4) throw UsageError("resolution must be >= 4");
  if (benchmark == "advection" && (n_steps < 2 || n_steps % 2 != 0))
    throw UsageError("advection n_steps must be even and >= 2");
  oracle.validate();
}

nlohmann::json DataSpec::to_json() const {
  nlohmann::json j{{"benchmark", benchmark}, {"samples", samples}, {"resolution", resolution}, {"seed", seed}};
  if (benchmark == "heat" || benchmark == "advection" || benchmark == "burgers")
    j["oracle"] = {{"c", oracle.c}, {"beta", oracle.beta}, {"nu", oracle.nu}, {"t", oracle.t}};
  if (benchmark == "advection") j["n_steps"] = n_steps;
  return j;
}

DataSpec DataSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("data spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "benchmark" && key != "samples" && key != "resolution" && key != "seed" && key != "oracle" &&
        key != "n_steps")
      throw UsageError("unknown data field '" + key + "'");
  DataSpec s;
  try {
    s.benchmark = j.value("benchmark", s.benchmark);
    s.samples = j.value("samples", s.samples);
    s.resolution = j.value("resolution", s.resolution);
    s.seed = j.value("seed", s.seed);
    s.n_steps = j.value("n_steps", s.n_steps);
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      for (const auto& [key, _] : o.items())
        if (key != "c" && key != "beta" && key != "nu" && key != "t") throw UsageError("unknown oracle field '" + key + "'");
      s.oracle.c = o.value("c", s.oracle.c);
      s.oracle.beta = o.value("beta", s.oracle.beta);
      s.oracle.nu = o.value("nu", s.oracle.nu);
      s.oracle.t = o.value("t", s.oracle.t);
    }
  } catch (const nlohmann::json::type_error& e) {
    throw UsageError(std::string("data field has the wrong type: ") + e.what());
  }
  s.validate();
  return s;
}

std::string DataSpec::hash() const { return canonical_hash(to_json()); }

Dataset generate_dataset(const DataSpec& s, int threads) {
  s.validate();
  if (s.benchmark == "heat") return gen_heat_dataset(s.samples, Grid(s.resolution), s.oracle, s.seed, threads);
  if (s.benchmark == "advection")
    return gen_advection_dataset(s.samples, Grid(s.resolution), s.oracle, s.n_steps, s.seed, threads);
  if (s.benchmark == "burgers") return gen_burgers_dataset(s.samples, Grid(s.resolution), s.oracle, s.seed, threads);
  return gen_darcy_dataset(s.samples, Grid(s.resolution, s.resolution), s.seed, threads);
}

Dataset cached_dataset(const DataSpec& spec, const fs::path& cache_dir, int threads) {
  const std::string name = spec.benchmark + "_" + spec.hash();
  if (fs::exists(cache_dir / (name + ".json"))) return load_dataset(cache_dir, name);
  Dataset ds = generate_dataset(spec, threads);
  ds.name = name;
  ds.meta["spec"] = spec.to_json();
  save_dataset(cache_dir, ds, true);
  return ds;
}

std::string SuiteEntry::config_hash() const {
  return canonical_hash({{"label", label},
                         {"arch", arch.to_json()},
                         {"train", train.to_json()},
                         {"train_data", train_data.to_json()},
                         {"test_data", test_data.to_json()}});
}

std::vector<std::string> suite_names() {
  return {"heat_linear", "advection_linear", "burgers", "darcy_ablation", "pq_variants"};
}

namespace {

struct Budget {
  int n_train, n_test, resolution, epochs, batch;
};

Budget budget(const std::string& benchmark, bool smoke) {
  if (smoke) {
    if (benchmark == "darcy") return {8, 4, 16, 1, 4};
    if (benchmark == "burgers") return {8, 4, 64, 1, 4};
    return {8, 4, 32, 1, 4};
  }
  if (benchmark == "heat") return {1000, 100, 128, 500, 20};
  if (benchmark == "advection") return {1000, 100, 128, 500, 20};
  if (benchmark == "burgers") return {256, 64, 128, 300, 20};
  return {200, 40, 32, 150, 10};
}

std::vector<SuiteEntry> with_budget(const std::string& benchmark, const SuiteOptions& opt,
                                    std::vector<std::pair<std::string, ArchConfig>> rows, double lr0 = 1e-3) {
  const Budget b = budget(benchmark, opt.smoke);
  DataSpec train_data;
  train_data.benchmark = benchmark;
  train_data.samples = b.n_train;
  train_data.resolution = b.resolution;
  train_data.seed = derive_seed(opt.seed, 100);
  DataSpec test_data = train_data;
  test_data.samples = b.n_test;
  test_data.seed = derive_seed(opt.seed, 200);
  TrainConfig tc;
  tc.epochs = b.epochs;
  tc.batch_size = b.batch;
  tc.lr0 = lr0;
  tc.seed = derive_seed(opt.seed, 300);
  tc.eval_every = std::max(1, b.epochs / 50);
  tc.threads = opt.threads;
  std::vector<SuiteEntry> out;
  for (auto& [label, arch] : rows) {
    arch.validate();
    out.push_back({label, arch, tc, train_data, test_data});
  }
  return out;
}

ArchConfig heat_table_arch() {
  ArchConfig a;
  a.d = 1;
  a.modes = 1;
  a.n_p = 4;
  a.n_layers = 1;
  a.lift_kind = LiftKind::linear;
  a.recover_kind = RecoverKind::mlp;
  a.with_local_propagator = false;
  return a;
}

}  // namespace

std::vector<SuiteEntry> suite_entries(const std::string& suite, const SuiteOptions& opt) {
  std::vector<SuiteEntry> all;
  if (suite == "heat_linear") {
    ArchConfig no_a = heat_table_arch();
    no_a.with_a_tilde = false;
    all = with_budget("heat", opt, {{"skno", heat_table_arch()}, {"w.o. A along p", no_a}});
  } else if (suite == "advection_linear") {
    ArchConfig a;
    a.d = 1;
    a.in_channels = a.out_channels = 10;
    a.modes = 8;
    a.n_p = 16;
    a.n_layers = 1;
    a.recover_kind = RecoverKind::mlp;
    a.with_local_propagator = false;
    ArchConfig no_a = a;
    no_a.with_a_tilde = false;
    all = with_budget("advection", opt, {{"skno", a}, {"w.o. A along p", no_a}});
  } else if (suite == "burgers") {
    ArchConfig a;
    a.d = 1;
    a.modes = 16;
    a.n_p = 64;
    a.n_layers = 4;
    a.recover_kind = RecoverKind::mlp;
    a.with_local_propagator = false;
    a.with_positional_features = true;
    all = with_budget("burgers", opt, {{"skno", a}}, 3e-3);
  } else if (suite == "darcy_ablation") {
    ArchConfig base;
    base.d = 2;
    base.modes = 8;
    base.n_p = 32;
    base.n_layers = 5;
    base.recover_kind = RecoverKind::mlp;
    base.with_local_propagator = true;
    base.with_positional_features = true;
    auto variant = [&](auto edit) {
      ArchConfig a = base;
      edit(a);
      return a;
    };
    all = with_budget(
        "darcy", opt,
        {{"baseline", base},
         {"w.o. double res", variant([](ArchConfig& a) { a.with_linear_residual = a.with_nonlinear_residual = false; })},
         {"w.o. linear res", variant([](ArchConfig& a) { a.with_linear_residual = false; })},
         {"w.o. nonlinear res", variant([](ArchConfig& a) { a.with_nonlinear_residual = false; })},
         {"w.o. A along p", variant([](ArchConfig& a) { a.with_a_tilde = false; })},
         {"w.o. b", variant([](ArchConfig& a) { a.with_bias_b = false; })},
         {"w.o. global propagators", variant([](ArchConfig& a) { a.with_global_propagators = false; })},
         {"w.o. local propagator", variant([](ArchConfig& a) {
            a.with_local_propagator = false;
            a.n_layers = 4;
          })}},
        3e-3);
  } else if (suite == "pq_variants") {
    std::vector<std::pair<std::string, ArchConfig>> rows;
    for (auto kind : {RecoverKind::delta, RecoverKind::step, RecoverKind::mean, RecoverKind::linear, RecoverKind::mlp,
                      RecoverKind::mlp_dropout}) {
      ArchConfig a = heat_table_arch();
      a.recover_kind = kind;
      rows.emplace_back("recover " + std::string(to_string(kind)), a);
    }
    for (auto kind : {LiftKind::constant, LiftKind::linear, LiftKind::mlp, LiftKind::mlp_dropout}) {
      ArchConfig a = heat_table_arch();
      a.lift_kind = kind;
      rows.emplace_back("lift " + std::string(to_string(kind)), a);
    }
    all = with_budget("heat", opt, rows);
  } else {
    throw UsageError("unknown suite '" + suite + "' (expected heat_linear, advection_linear, burgers, darcy_ablation or "
                     "pq_variants)");
  }
  if (opt.labels.empty()) return all;
  std::vector<SuiteEntry> picked;
  for (const auto& label : opt.labels) {
    auto it = std::find_if(all.begin(), all.end(), [&](const SuiteEntry& e) { return e.label == label; });
    if (it == all.end()) throw UsageError("suite '" + suite + "' has no row '" + label + "'");
    picked.push_back(*it);
  }
  return picked;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "suite,config_hash,arch_summary,final_rel_l2,wall_seconds\n";
  for (const auto& r : rows)
    os << r.suite << "," << r.config_hash << "," << r.arch_summary << "," << r.final_rel_l2 << "," << r.wall_seconds
       << "\n";
  return os.str();
}

std::vector<SuiteRow> read_suite_csv(const fs::path& path) {
  std::vector<SuiteRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw UsageError("malformed suite row in " + path.string() + ": " + line);
    rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4])});
  }
  return rows;
}

fs::path suite_run_dir(const SuiteOptions& opt, const std::string& suite, const SuiteEntry& entry) {
  return opt.out_dir / suite / entry.config_hash();
}

std::vector<SuiteRow> run_experiment_suite(const std::string& suite, const SuiteOptions& opt) {
  const auto entries = suite_entries(suite, opt);
  fs::create_directories(opt.out_dir);
  const fs::path csv = opt.out_dir / (suite + ".csv");
  auto rows = read_suite_csv(csv);
  for (const auto& e : entries) {
    const std::string h = e.config_hash();
    if (std::any_of(rows.begin(), rows.end(), [&](const SuiteRow& r) { return r.config_hash == h; })) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset train_set = cached_dataset(e.train_data, opt.out_dir / "data", opt.threads);
    const Dataset test_set = cached_dataset(e.test_data, opt.out_dir / "data", opt.threads);
    const auto result = train(e.train, e.arch, train_set, test_set, suite_run_dir(opt, suite, e));
    SuiteRow row;
    row.suite = suite;
    row.config_hash = h;
    row.arch_summary = e.label + ": " + e.arch.summary();
    row.final_rel_l2 = result.best_test_rel_l2;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
    write_text_atomic(csv, suite_csv(rows));
  }
  if (!fs::exists(csv)) write_text_atomic(csv, suite_csv(rows));
  return rows;
}

}  // namespace skno
