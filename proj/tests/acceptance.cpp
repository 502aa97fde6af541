#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skno/adjoint.hpp"
#include "skno/diagnostics.hpp"
#include "skno/oracle.hpp"
#include "skno/suite.hpp"
#include "skno/train.hpp"

using namespace skno;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Context {
  fs::path out;
  int threads = 1;

  SuiteOptions suite_options(std::vector<std::string> labels) const {
    SuiteOptions opt;
    opt.out_dir = out / "suites";
    opt.threads = threads;
    opt.labels = std::move(labels);
    return opt;
  }

  /// Trains (or reuses) the named rows and returns them in the requested order.
  std::vector<SuiteRow> rows(const std::string& suite, const std::vector<std::string>& labels) const {
    const SuiteOptions opt = suite_options(labels);
    const auto all = run_experiment_suite(suite, opt);
    std::vector<SuiteRow> picked;
    for (const auto& e : suite_entries(suite, opt)) {
      const std::string h = e.config_hash();
      auto it = std::find_if(all.begin(), all.end(), [&](const SuiteRow& r) { return r.config_hash == h; });
      if (it == all.end()) throw std::runtime_error("suite row missing after run: " + e.label);
      picked.push_back(*it);
    }
    return picked;
  }

  SknoModel model(const std::string& suite, const std::string& label) const {
    rows(suite, {label});
    const SuiteOptions opt = suite_options({label});
    return SknoModel::load(suite_run_dir(opt, suite, suite_entries(suite, opt).front()) / "checkpoint");
  }

  SuiteEntry entry(const std::string& suite, const std::string& label) const {
    return suite_entries(suite, suite_options({label})).front();
  }
};

Outcome oracle_fidelity(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport rep = oracle_verify();
  const double secs = seconds_since(t0);
  std::string worst;
  double worst_acc = 0.0;
  for (const auto& r : rep.rows) {
    if (r.check == "accuracy") worst_acc = std::max(worst_acc, r.rel_l2);
    if (!r.pass && worst.empty()) worst = " first failure: " + r.check + "/" + r.recovery + " rel_l2=" + fmt(r.rel_l2);
  }
  return {rep.pass && secs < 10.0, "max accuracy error " + fmt(worst_acc) + " (tol 1e-3), " + fmt(secs) + " s" + worst};
}

Outcome gradient_correctness(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const LiftKind lifts[] = {LiftKind::constant, LiftKind::linear, LiftKind::mlp, LiftKind::mlp_dropout};
  const RecoverKind recs[] = {RecoverKind::delta, RecoverKind::step,  RecoverKind::mean,
                              RecoverKind::linear, RecoverKind::mlp, RecoverKind::mlp_dropout};
  double worst = 0.0;
  std::string failures;
  for (int i = 0; i < 10; ++i) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(i)));
    ArchConfig a;
    a.d = 1 + (i / 2) % 2;
    a.n_layers = 1 + i % 4;
    a.n_p = 4;
    a.modes = 2;
    a.a_tilde_form = i % 2 == 0 ? ATildeForm::diag : ATildeForm::full;
    a.lift_kind = lifts[i % 4];
    a.recover_kind = recs[i % 6];
    a.with_local_propagator = rng.uniform() < 0.5;
    a.with_positional_features = rng.uniform() < 0.5;
    a.in_channels = 1 + static_cast<int>(rng.uniform() * 2);
    a.validate();
    const Grid g = a.d == 1 ? Grid(8) : Grid(6, 6);
    const int batch = 2;
    SknoModel m(a, derive_seed(7, static_cast<std::uint64_t>(i)));
    std::vector<double> in(g.points() * a.in_channels * batch), target(g.points() * a.out_channels * batch);
    for (auto& x : in) x = rng.normal();
    for (auto& x : target) x = rng.normal();
    GradCheckOptions opt;
    opt.training = a.lift_kind == LiftKind::mlp_dropout || a.recover_kind == RecoverKind::mlp_dropout;
    opt.dropout_seed = static_cast<std::uint64_t>(i);
    const auto rep = grad_check(m, g, batch, in, target, opt);
    for (const auto& r : rep.rows) {
      worst = std::max(worst, r.max_rel_error);
      if (!r.pass) failures += " model" + std::to_string(i) + ":" + r.tensor;
    }
  }
  const double secs = seconds_since(t0);
  return {failures.empty() && secs < 300.0,
          "10 models, max rel error " + fmt(worst) + " (tol 1e-6), " + fmt(secs) + " s" + failures};
}

Outcome adjoint_identities(const Context&) {
  ArchConfig a;
  a.n_p = 32;
  a.modes = 8;
  a.with_local_propagator = false;
  a.recover_kind = RecoverKind::linear;
  a.lift_kind = LiftKind::linear;
  const auto rep = adjoint_identity_check(SknoModel(a, 5), Grid(64), 100, 6);
  const bool pass = rep.draws == 100 && rep.lift_checked && rep.recover_max_rel < 1e-12 && rep.lift_max_rel < 1e-12;
  return {pass, "recover " + fmt(rep.recover_max_rel) + ", lift " + fmt(rep.lift_max_rel) + " over " +
                    std::to_string(rep.draws) + " draws (tol 1e-12)"};
}

Outcome heat_learning(const Context& ctx) {
  const auto rows = ctx.rows("heat_linear", {"skno", "w.o. A along p"});
  const double secs = rows[0].wall_seconds + rows[1].wall_seconds;
  return {rows[0].final_rel_l2 <= 1e-2 && rows[1].final_rel_l2 > 1e-1 && secs < 1200.0,
          "skno " + fmt(rows[0].final_rel_l2) + " (<= 1e-2), w.o. A along p " + fmt(rows[1].final_rel_l2) +
              " (> 1e-1), " + fmt(secs) + " s"};
}

Outcome recovery_parity(const Context& ctx) {
  const auto rows = ctx.rows("pq_variants", {"recover delta", "recover step", "recover mean", "recover linear"});
  double lo = rows[0].final_rel_l2, hi = lo;
  std::string detail;
  const char* names[] = {"delta", "step", "mean", "linear"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    lo = std::min(lo, rows[i].final_rel_l2);
    hi = std::max(hi, rows[i].final_rel_l2);
    detail += std::string(names[i]) + " " + fmt(rows[i].final_rel_l2) + ", ";
  }
  return {hi <= 2.0 * lo, detail + "max/min " + fmt(hi / lo) + " (<= 2)"};
}

Outcome burgers(const Context& ctx) {
  const auto row = ctx.rows("burgers", {"skno"}).front();
  const SknoModel m = ctx.model("burgers", "skno");
  const DataSpec test = ctx.entry("burgers", "skno").test_data;
  const auto rep = superres_sweep(
      m,
      [&](int n) {
        DataSpec s = test;
        s.resolution = n;
        return generate_dataset(s, ctx.threads);
      },
      {128, 256, 512, 1024}, ctx.threads);
  std::string sweep;
  for (const auto& r : rep.rows) sweep += " " + std::to_string(r.resolution) + ":" + fmt(r.rel_l2);
  return {row.final_rel_l2 < 5e-3 && rep.max_min_ratio < 1.25,
          "test " + fmt(row.final_rel_l2) + " (< 5e-3), superres max/min " + fmt(rep.max_min_ratio) + " (< 1.25)," +
              sweep};
}

Outcome darcy_ordering(const Context& ctx) {
  const auto rows = ctx.rows("darcy_ablation", {"baseline", "w.o. local propagator", "w.o. global propagators"});
  const double base = rows[0].final_rel_l2, no_local = rows[1].final_rel_l2, no_global = rows[2].final_rel_l2;
  const double secs = rows[0].wall_seconds + rows[1].wall_seconds + rows[2].wall_seconds;
  return {base < no_local && no_local < no_global && no_global >= 5.0 * base && secs < 3600.0,
          "baseline " + fmt(base) + ", w.o. local " + fmt(no_local) + ", w.o. global " + fmt(no_global) +
              " (ratio " + fmt(no_global / base) + ", >= 5), " + fmt(secs) + " s"};
}

Field band_limited(const Grid& g) {
  Field f(g, 1);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int x = 0; x < g.resolution(0); ++x) {
    const double s = static_cast<double>(x) / g.resolution(0);
    f.at(x, 0) = std::sin(two_pi * s) + 0.5 * std::cos(2 * two_pi * s + 0.3) - 0.25 * std::sin(5 * two_pi * s + 1.1);
  }
  return f;
}

double shared_point_error(const SknoModel& m, int n) {
  const Field lo = forward(m, band_limited(Grid(n)));
  const Field hi = forward(m, band_limited(Grid(2 * n)));
  double num = 0.0, den = 0.0;
  for (int x = 0; x < n; ++x)
    for (int c = 0; c < lo.aux_len(); ++c) {
      const double d = lo.at(x, c) - hi.at(2 * x, c);
      num += d * d;
      den += hi.at(2 * x, c) * hi.at(2 * x, c);
    }
  return std::sqrt(num / den);
}

Outcome resolution_invariance(const Context& ctx) {
  const double heat = shared_point_error(ctx.model("heat_linear", "skno"), 128);
  const double burgers = shared_point_error(ctx.model("burgers", "skno"), 128);
  return {heat < 1e-4 && burgers < 1e-4, "N=128 vs 256 shared-point rel L2: trained heat model " + fmt(heat) +
                                             ", trained burgers model " + fmt(burgers) + " (< 1e-4)"};
}

Outcome diagnostics_invariants(const Context&) {
  std::vector<std::string> failed;
  ArchConfig a;
  a.n_layers = 3;
  a.n_p = 16;
  a.modes = 4;
  a.lift_kind = LiftKind::linear;
  a.recover_kind = RecoverKind::linear;
  a.with_positional_features = false;
  const SknoModel m(a, 11);
  const Field in = band_limited(Grid(64));
  const auto stages = trace_entropies(m, in);
  const double s0 = stages.front().entropy;
  if (!(s0 < 1e-10)) failed.push_back("stage-0");

  const auto trace = layer_trace(m, in);
  const Eigen::MatrixXd& v = trace.back().second;
  const Param& chi_p = m.param("recover.chi");
  const Eigen::VectorXd chi = Eigen::Map<const Eigen::VectorXd>(chi_p.data.data(), static_cast<Eigen::Index>(chi_p.size()));
  double prev = -1.0, worst_identity = 0.0;
  for (int r = 1; r <= a.n_p; ++r) {
    const auto e = energy_capture(v, chi, r);
    if (e.energy < prev - 1e-15) failed.push_back("monotone r=" + std::to_string(r));
    prev = e.energy;
    const double predicted = e.u_norm * std::sqrt(std::max(0.0, 1.0 - e.energy));
    worst_identity = std::max(worst_identity, std::abs(e.truncation_error - predicted) / e.u_norm);
  }
  if (!(worst_identity < 1e-10)) failed.push_back("identity");

  Eigen::MatrixXd rank1 = Eigen::VectorXd::LinSpaced(12, 1.0, 3.0) * Eigen::RowVectorXd::LinSpaced(5, -1.0, 2.0);
  const double e_rank1 = entanglement_entropy(rank1);
  const double e_id = entanglement_entropy(3.5 * Eigen::MatrixXd::Identity(8, 8));
  if (!(std::abs(e_rank1) < 1e-12)) failed.push_back("rank1");
  if (!(std::abs(e_id - std::log(8.0)) < 1e-12)) failed.push_back("identity-entropy");
  std::string detail = "stage-0 " + fmt(s0) + ", truncation identity " + fmt(worst_identity) + ", rank-1 " +
                       fmt(e_rank1) + ", 3.5*I_8 " + fmt(e_id) + " vs ln 8";
  for (const auto& f : failed) detail += " failed:" + f;
  return {failed.empty(), detail};
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string drop_wall_column(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, out;
  while (std::getline(is, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() == 5) cols.erase(cols.begin() + 3);
    for (const auto& c : cols) out += c + ",";
    out += "\n";
  }
  return out;
}

Outcome determinism(const Context& ctx) {
  SuiteEntry e = ctx.entry("heat_linear", "skno");
  e.train_data.samples = 100;
  e.test_data.samples = 20;
  e.train.epochs = 20;
  e.train.threads = 1;
  const Dataset tr = generate_dataset(e.train_data), te = generate_dataset(e.test_data);
  const fs::path a = ctx.out / "determinism" / "a", b = ctx.out / "determinism" / "b";
  fs::remove_all(ctx.out / "determinism");
  train(e.train, e.arch, tr, te, a);
  train(e.train, e.arch, tr, te, b);
  int files = 0;
  std::string diffs;
  for (const auto& f : fs::recursive_directory_iterator(a / "checkpoint")) {
    if (!f.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(f.path(), a);
    if (read_file(f.path()) != read_file(b / rel)) diffs += " " + rel.string();
  }
  if (drop_wall_column(read_file(a / "metrics.csv")) != drop_wall_column(read_file(b / "metrics.csv")))
    diffs += " metrics.csv";
  return {files > 0 && diffs.empty(), std::to_string(files) +
                                          " checkpoint files and metrics.csv (wall_seconds excluded) compared" +
                                          (diffs.empty() ? ", bit-identical" : ", differing:" + diffs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks, one line per criterion"};
  Context ctx;
  std::string out = "acceptance_runs";
  std::vector<int> only;
  bool fresh = false;
  app.add_option("--out", out, "Working directory for trained models");
  app.add_option("--only", only, "Criteria to run (default all)")->check(CLI::Range(1, 10));
  app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--fresh", fresh, "Discard previously trained rows");
  CLI11_PARSE(app, argc, argv);
  ctx.out = out;
  if (fresh) fs::remove_all(ctx.out);
  fs::create_directories(ctx.out);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {"oracle fidelity", oracle_fidelity},
      {"gradient correctness", gradient_correctness},
      {"adjoint identities", adjoint_identities},
      {"heat operator learning", heat_learning},
      {"recovery-variant parity", recovery_parity},
      {"burgers and super-resolution", burgers},
      {"darcy ablation ordering", darcy_ordering},
      {"resolution invariance", resolution_invariance},
      {"diagnostics invariants", diagnostics_invariants},
      {"determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(t0)) << " s]" << std::endl;
  }
  return all_pass ? 0 : 1;
}
