#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skno/dataset.hpp"
#include "skno/model.hpp"

namespace skno {

/// Shannon entropy (natural log) of the squared, unit-normalized singular values.
double entanglement_entropy(const Eigen::MatrixXd& v);

struct EntropyRow {
  std::string stage;  // "0", "01", "1", "12", ..., "L"
  double entropy = 0.0;
  bool skipped = false;  // all-zero snapshot
};

/// Snapshots v_l and the pre-activation h_l of every layer for one input sample, each as points x n_p.
std::vector<std::pair<std::string, Eigen::MatrixXd>> layer_trace(const SknoModel& model, const Field& a);
std::vector<EntropyRow> trace_entropies(const SknoModel& model, const Field& a);
std::string entropy_csv(const std::vector<EntropyRow>& rows);  // stage,entropy

struct EnergyCapture {
  double energy = 0.0;            // E(r)
  double truncation_error = 0.0;  // ||u - (V)_r chi||, computed directly
  double u_norm = 0.0;
};
/// 1 <= r <= cols(v); u = v chi must be nonzero.
EnergyCapture energy_capture(const Eigen::MatrixXd& v, const Eigen::VectorXd& chi, int r);

struct DictionaryRow {
  int aux_index = 0;
  double abs_weight = 0.0;
  double mean_energy = 0.0;
  bool below_threshold = false;
};
/// Linear recovery only. Rows sorted by |chi| descending; energy is the test-set mean of ||v_L(., m)||^2 / N.
std::vector<DictionaryRow> dictionary_report(const SknoModel& model, const Dataset& test, double threshold = 1e-3);
std::string dictionary_csv(const std::vector<DictionaryRow>& rows);

struct SuperresRow {
  int resolution = 0;
  double rel_l2 = 0.0;
  bool skipped = false;
};
struct SuperresReport {
  std::vector<SuperresRow> rows;
  double variance = 0.0;   // population variance over evaluated resolutions
  double max_min_ratio = 1.0;
  std::vector<std::string> warnings;
  std::string csv() const;  // resolution,rel_l2
};
/// `generate(n)` returns matched pairs at resolution n drawn from shared seeds.
SuperresReport superres_sweep(const SknoModel& model, const std::function<Dataset(int)>& generate,
                              const std::vector<int>& resolutions, int threads = 1);

}  // namespace skno
