#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "skno/adjoint.hpp"
#include "skno/diagnostics.hpp"
#include "skno/error.hpp"
#include "skno/oracle.hpp"
#include "skno/skt_io.hpp"
#include "skno/suite.hpp"
#include "skno/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skno;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumeric = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool force = false;
  std::string out = "skno_out";
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json read_config(const std::string& path, bool required) {
  if (path.empty()) {
    if (required) throw UsageError("--config is required for this command");
    return json::object();
  }
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw UsageError("config " + path + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw UsageError("malformed JSON in " + path + " at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& what) {
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError("unknown " + what + " field '" + key + "'");
}

class Manifest {
 public:
  Manifest(std::string command, const json& config, std::optional<std::uint64_t> seed)
      : command_(std::move(command)), hash_(canonical_hash(config)), seed_(seed), start_(utc_now()) {}
  void add(const fs::path& p) { artifacts_.push_back(p.string()); }
  void write(const fs::path& out_dir) {
    fs::create_directories(out_dir);
    json j{{"command", command_}, {"config_hash", hash_}, {"start", start_}, {"end", utc_now()},
           {"artifacts", artifacts_}};
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    write_text_atomic(out_dir / (command_ + ".manifest.json"), j.dump(2) + "\n");
  }

 private:
  std::string command_, hash_;
  std::optional<std::uint64_t> seed_;
  std::string start_;
  std::vector<std::string> artifacts_;
};

void refuse_existing(const fs::path& p, bool force) {
  if (fs::exists(p) && !force) throw UsageError(p.string() + " exists; pass --force to overwrite");
}

fs::path write_output(const fs::path& p, const std::string& text, bool force, Manifest& m) {
  refuse_existing(p, force);
  fs::create_directories(p.parent_path());
  write_text_atomic(p, text);
  m.add(p);
  return p;
}

Dataset resolve_data(const json& j, int threads) {
  if (!j.is_object()) throw UsageError("data entry must be a JSON object");
  if (j.contains("dir")) {
    reject_unknown(j, {"dir", "name"}, "data");
    if (!j.contains("name")) throw UsageError("data entry with 'dir' also needs 'name'");
    return load_dataset(j["dir"].get<std::string>(), j["name"].get<std::string>());
  }
  return generate_dataset(DataSpec::from_json(j), threads);
}

const json& need(const json& j, const std::string& key) {
  if (!j.contains(key)) throw UsageError("config is missing '" + key + "'");
  return j[key];
}

int cmd_gen(const Globals& g) {
  json cfg = read_config(g.config, true);
  std::string name;
  if (cfg.contains("name")) {
    name = cfg["name"].get<std::string>();
    cfg.erase("name");
  }
  if (g.seed) cfg["seed"] = *g.seed;
  const DataSpec spec = DataSpec::from_json(cfg);
  Manifest m("gen", cfg, spec.seed);
  Dataset ds = generate_dataset(spec, g.threads);
  ds.name = name.empty() ? spec.benchmark : name;
  ds.meta["spec"] = spec.to_json();
  for (const auto& p : save_dataset(g.out, ds, g.force)) {
    std::cout << p.string() << "\n";
    m.add(p);
  }
  m.write(g.out);
  return kOk;
}

int cmd_oracle_verify(const Globals& g, const std::vector<std::string>& recoveries) {
  json cfg = read_config(g.config, false);
  reject_unknown(cfg, {"resolution", "p_max", "n_p", "c", "t", "doublings", "tolerance"}, "oracle-verify");
  VerifyOptions opt;
  opt.resolution = cfg.value("resolution", opt.resolution);
  const double p_max = cfg.value("p_max", opt.phase.p_max);
  opt.phase = PhaseGrid::symmetric(p_max, cfg.value("n_p", opt.phase.n_p));
  opt.oracle.c = cfg.value("c", opt.oracle.c);
  opt.oracle.t = cfg.value("t", opt.oracle.t);
  opt.doublings = cfg.value("doublings", opt.doublings);
  opt.tolerance = cfg.value("tolerance", opt.tolerance);
  if (!recoveries.empty()) {
    opt.recoveries.clear();
    for (const auto& r : recoveries) opt.recoveries.push_back(parse_phase_recovery(r));
  }
  Manifest m("oracle-verify", cfg, std::nullopt);
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport rep = oracle_verify(opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << rep.table();
  std::cout << (rep.pass ? "PASS" : "FAIL") << " (" << secs << " s)\n";
  write_output(fs::path(g.out) / "oracle_verify.csv", rep.table(), true, m);
  m.write(g.out);
  return rep.pass ? kOk : kVerifyFailed;
}

int cmd_train(const Globals& g) {
  json cfg = read_config(g.config, true);
  reject_unknown(cfg, {"arch", "train", "train_data", "test_data", "resolutions"}, "train");
  const ArchConfig arch = ArchConfig::from_json(need(cfg, "arch"));
  TrainConfig tc = TrainConfig::from_json(cfg.value("train", json::object()));
  if (g.seed) tc.seed = *g.seed;
  tc.threads = g.threads;
  const fs::path out = g.out;
  refuse_existing(out / "checkpoint", g.force);
  refuse_existing(out / "metrics.csv", g.force);
  fs::remove_all(out / "checkpoint");
  fs::remove(out / "metrics.csv");
  Manifest m("train", cfg, tc.seed);
  const Dataset train_set = resolve_data(need(cfg, "train_data"), g.threads);
  const Dataset test_set = resolve_data(need(cfg, "test_data"), g.threads);
  TrainResult r;
  try {
    if (cfg.contains("resolutions"))
      r = train_mixed_resolution(tc, arch, train_set, test_set, cfg["resolutions"].get<std::vector<int>>(), out);
    else
      r = train(tc, arch, train_set, test_set, out);
  } catch (const NumericError&) {
    if (fs::exists(out / "checkpoint")) m.add(out / "checkpoint");
    m.write(out);
    throw;
  }
  m.add(out / "checkpoint");
  m.add(out / "metrics.csv");
  m.write(out);
  std::cout << "best test rel L2 " << r.best_test_rel_l2 << " at epoch " << r.best_epoch << "\n";
  std::cout << (out / "checkpoint").string() << "\n" << (out / "metrics.csv").string() << "\n";
  return kOk;
}

int cmd_eval(const Globals& g) {
  const json cfg = read_config(g.config, true);
  reject_unknown(cfg, {"checkpoint", "data", "resolution"}, "eval");
  const SknoModel model = SknoModel::load(need(cfg, "checkpoint").get<std::string>());
  const Dataset ds = resolve_data(need(cfg, "data"), g.threads);
  const int res = cfg.value("resolution", 0);
  Manifest m("eval", cfg, std::nullopt);
  const EvalResult r = evaluate(model, ds, res, g.threads);
  const auto path = write_output(fs::path(g.out) / ("eval_" + std::to_string(r.resolution) + ".csv"), r.csv(),
                                 g.force, m);
  m.write(g.out);
  std::cout << "resolution,rel_l2\n" << r.resolution << "," << r.mean_rel_l2 << "\n" << path.string() << "\n";
  return kOk;
}

int cmd_suite(const Globals& g) {
  const json cfg = read_config(g.config, true);
  reject_unknown(cfg, {"suite", "smoke", "rows", "seed"}, "suite");
  SuiteOptions opt;
  const std::string suite = need(cfg, "suite").get<std::string>();
  opt.out_dir = g.out;
  opt.seed = g.seed ? *g.seed : cfg.value("seed", std::uint64_t{0});
  opt.threads = g.threads;
  opt.smoke = cfg.value("smoke", false);
  if (cfg.contains("rows")) opt.labels = cfg["rows"].get<std::vector<std::string>>();
  suite_entries(suite, opt);
  const fs::path csv = opt.out_dir / (suite + ".csv");
  if (g.force) fs::remove(csv);
  Manifest m("suite", cfg, opt.seed);
  const auto rows = run_experiment_suite(suite, opt);
  m.add(csv);
  m.write(g.out);
  std::cout << suite_csv(rows);
  return kOk;
}

int cmd_diagnose(const Globals& g) {
  const json cfg = read_config(g.config, true);
  reject_unknown(cfg, {"checkpoint", "analysis", "data", "samples", "resolutions", "rank"}, "diagnose");
  const SknoModel model = SknoModel::load(need(cfg, "checkpoint").get<std::string>());
  const std::string analysis = need(cfg, "analysis").get<std::string>();
  const fs::path out = g.out;
  Manifest m("diagnose", cfg, std::nullopt);
  if (analysis == "entropy") {
    const Dataset ds = resolve_data(need(cfg, "data"), g.threads);
    const int n = std::min(cfg.value("samples", 5), ds.count);
    for (int i = 0; i < n; ++i) {
      const auto p = write_output(out / ("entropy_" + std::to_string(i) + ".csv"),
                                  entropy_csv(trace_entropies(model, ds.input(i))), g.force, m);
      std::cout << p.string() << "\n";
    }
  } else if (analysis == "dictionary") {
    const Dataset ds = resolve_data(need(cfg, "data"), g.threads);
    std::cout << write_output(out / "dictionary.csv", dictionary_csv(dictionary_report(model, ds)), g.force, m).string()
              << "\n";
  } else if (analysis == "energy") {
    if (model.arch().recover_kind != RecoverKind::linear || model.arch().out_channels != 1)
      throw UsageError("energy capture needs linear recovery with one output channel");
    const Dataset ds = resolve_data(need(cfg, "data"), g.threads);
    const auto trace = layer_trace(model, ds.input(0));
    const Eigen::MatrixXd& v = trace.back().second;
    const auto& chi = model.param("recover.chi").data;
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(chi.data(), static_cast<Eigen::Index>(chi.size()));
    std::ostringstream os;
    os.precision(12);
    os << "rank,energy,truncation_error,identity_value\n";
    for (int r = 1; r <= model.arch().n_p; ++r) {
      const auto e = energy_capture(v, c, r);
      os << r << "," << e.energy << "," << e.truncation_error << "," << e.u_norm * std::sqrt(std::max(0.0, 1.0 - e.energy))
         << "\n";
    }
    std::cout << write_output(out / "energy.csv", os.str(), g.force, m).string() << "\n";
  } else if (analysis == "superres") {
    json spec = need(cfg, "data");
    const auto resolutions = need(cfg, "resolutions").get<std::vector<int>>();
    DataSpec::from_json(spec);
    auto gen = [&](int n) {
      json s = spec;
      s["resolution"] = n;
      return generate_dataset(DataSpec::from_json(s), g.threads);
    };
    const auto rep = superres_sweep(model, gen, resolutions, g.threads);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << rep.csv() << "variance " << rep.variance << "\nmax/min ratio " << rep.max_min_ratio << "\n";
    std::cout << write_output(out / "superres.csv", rep.csv(), g.force, m).string() << "\n";
  } else {
    throw UsageError("unknown analysis '" + analysis + "' (expected entropy, dictionary, energy or superres)");
  }
  m.write(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral operator learning toolkit: data generation, training, evaluation and diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the configuration");
  app.add_option("--threads", g.threads, "Worker threads (1 gives bit-identical results)")->check(CLI::PositiveNumber);
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--out", g.out, "Output directory");

  std::vector<std::string> recoveries;
  auto* gen = app.add_subcommand("gen", "Generate a dataset");
  auto* verify = app.add_subcommand("oracle-verify", "Check the phase-space heat pipeline against the exact solution");
  verify->add_option("--recovery", recoveries, "Recovery kinds to check (delta, step)");
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* suite = app.add_subcommand("suite", "Run an experiment suite");
  auto* diagnose = app.add_subcommand("diagnose", "Entropy, dictionary, energy and super-resolution diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (gen->parsed()) return cmd_gen(g);
    if (verify->parsed()) return cmd_oracle_verify(g, recoveries);
    if (train_cmd->parsed()) return cmd_train(g);
    if (eval->parsed()) return cmd_eval(g);
    if (suite->parsed()) return cmd_suite(g);
    if (diagnose->parsed()) return cmd_diagnose(g);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
