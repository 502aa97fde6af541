#include "skno/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "skno/error.hpp"
#include "skno/linalg.hpp"
#include "skno/train.hpp"

namespace skno {

double entanglement_entropy(const Eigen::MatrixXd& v) {
  if (v.size() == 0) throw UsageError("entropy of an empty matrix");
  if (!v.allFinite()) throw NumericError("entropy of a non-finite matrix");
  if (v.cwiseAbs().maxCoeff() == 0.0) throw UsageError("entropy of an all-zero matrix");
  const Eigen::MatrixXd m = v.rows() >= v.cols() ? v : Eigen::MatrixXd(v.transpose());
  const Eigen::VectorXd s = svd(m).values;
  const double norm2 = s.squaredNorm();
  double h = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double c2 = s(i) * s(i) / norm2;
    if (c2 >= 1e-300) h -= c2 * std::log(c2);
  }
  return h;
}

std::vector<std::pair<std::string, Eigen::MatrixXd>> layer_trace(const SknoModel& model, const Field& a) {
  Tape tape;
  forward_batch(model, a.grid(), 1, a.values(), {}, &tape);
  std::vector<std::pair<std::string, Eigen::MatrixXd>> out;
  const int L = model.arch().n_layers;
  for (int l = 0; l < L; ++l) {
    out.emplace_back(std::to_string(l), tape.layers[l].v_in);
    out.emplace_back(std::to_string(l) + std::to_string(l + 1), tape.layers[l].h);
  }
  out.emplace_back(std::to_string(L), tape.v_out);
  return out;
}

std::vector<EntropyRow> trace_entropies(const SknoModel& model, const Field& a) {
  std::vector<EntropyRow> rows;
  for (const auto& [stage, v] : layer_trace(model, a)) {
    EntropyRow r;
    r.stage = stage;
    if (v.cwiseAbs().maxCoeff() == 0.0) r.skipped = true;
    else r.entropy = entanglement_entropy(v);
    rows.push_back(r);
  }
  return rows;
}

std::string entropy_csv(const std::vector<EntropyRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "stage,entropy\n";
  for (const auto& r : rows) {
    os << r.stage << ",";
    if (r.skipped) os << "skipped";
    else os << r.entropy;
    os << "\n";
  }
  return os.str();
}

EnergyCapture energy_capture(const Eigen::MatrixXd& v, const Eigen::VectorXd& chi, int r) {
  if (chi.size() != v.cols()) throw UsageError("chi length does not match the matrix columns");
  if (r < 1 || r > v.cols()) throw UsageError("rank r must lie in [1, n_p]");
  const Eigen::VectorXd u = v * chi;
  EnergyCapture e;
  e.u_norm = u.norm();
  if (e.u_norm == 0.0) throw UsageError("energy capture of a zero output");
  const auto s = svd(v);
  const Eigen::VectorXd proj = s.right.transpose() * chi;
  const Eigen::ArrayXd terms = (s.values.array() * proj.array()).square();
  const int k = std::min<int>(r, static_cast<int>(terms.size()));
  e.energy = terms.head(k).sum() / terms.sum();
  const Eigen::MatrixXd vr = s.left.leftCols(k) * s.values.head(k).asDiagonal() * s.right.leftCols(k).transpose();
  e.truncation_error = (u - vr * chi).norm();
  return e;
}

std::vector<DictionaryRow> dictionary_report(const SknoModel& model, const Dataset& test, double threshold) {
  const ArchConfig& arch = model.arch();
  if (arch.recover_kind != RecoverKind::linear)
    throw UsageError("dictionary report needs linear recovery; retrain with recover_kind = linear");
  check_compatible(arch, test);
  const int P = arch.n_p, U = arch.out_channels;
  std::vector<DictionaryRow> rows(P);
  const auto& chi = model.param("recover.chi").data;
  for (int m = 0; m < P; ++m) {
    rows[m].aux_index = m;
    double w = 0.0;
    for (int c = 0; c < U; ++c) w += chi[m * U + c] * chi[m * U + c];
    rows[m].abs_weight = std::sqrt(w);
  }
  const double n = static_cast<double>(test.grid.points());
  for (int i = 0; i < test.count; ++i) {
    Tape tape;
    const Field a = test.input(i);
    forward_batch(model, test.grid, 1, a.values(), {}, &tape);
    for (int m = 0; m < P; ++m) rows[m].mean_energy += tape.v_out.col(m).squaredNorm() / n;
  }
  for (auto& r : rows) {
    r.mean_energy /= test.count;
    r.below_threshold = r.mean_energy < threshold;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.abs_weight > y.abs_weight; });
  return rows;
}

std::string dictionary_csv(const std::vector<DictionaryRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "aux_index,abs_weight,mean_energy,below_threshold\n";
  for (const auto& r : rows)
    os << r.aux_index << "," << r.abs_weight << "," << r.mean_energy << "," << (r.below_threshold ? "true" : "false")
       << "\n";
  return os.str();
}

std::string SuperresReport::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "resolution,rel_l2\n";
  for (const auto& r : rows) {
    os << r.resolution << ",";
    if (r.skipped) os << "skipped";
    else os << r.rel_l2;
    os << "\n";
  }
  return os.str();
}

SuperresReport superres_sweep(const SknoModel& model, const std::function<Dataset(int)>& generate,
                              const std::vector<int>& resolutions, int threads) {
  SuperresReport rep;
  const int min_res = minimum_resolution(model.arch());
  std::vector<double> errors;
  for (int n : resolutions) {
    SuperresRow row;
    row.resolution = n;
    if (n < min_res) {
      row.skipped = true;
      rep.warnings.push_back("resolution " + std::to_string(n) + " is below 2 * modes = " + std::to_string(min_res) +
                             "; skipped");
    } else {
      row.rel_l2 = evaluate(model, generate(n), 0, threads).mean_rel_l2;
      errors.push_back(row.rel_l2);
    }
    rep.rows.push_back(row);
  }
  if (!errors.empty()) {
    const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
    for (double e : errors) rep.variance += (e - mean) * (e - mean);
    rep.variance /= errors.size();
    const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
    rep.max_min_ratio = *lo > 0.0 ? *hi / *lo : 1.0;
  }
  return rep;
}

}  // namespace skno
