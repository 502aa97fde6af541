#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skno/dataset.hpp"
#include "skno/model.hpp"

namespace skno {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 20;
  double lr0 = 1e-3;
  std::uint64_t seed = 0;
  int eval_every = 1;
  double clip_norm = 10.0;  // <= 0 disables clipping
  int threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected; missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct AdamState {
  ParamSet m, v;
  long step = 0;
  static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// One bias-corrected Adam update of the learnable tensors. Stencils are re-centred afterwards.
void adam_step(SknoModel& model, const GradientSet& grads, AdamState& state, double lr);
/// lr0 * (1 + cos(pi * epoch / (epochs - 1))) / 2; lr0 for a single epoch.
double cosine_lr(double lr0, int epoch, int epochs);
/// Rescales to `max_norm` when the global norm exceeds it. Returns the norm before clipping.
double clip_gradients(GradientSet& grads, double max_norm);

/// Per-channel input mean/std and target RMS from the training set.
void fit_normalization(SknoModel& model, const Dataset& train);

/// Mean loss and gradient over one batch, chunked across `threads` with fixed-order reduction.
struct BatchResult {
  double loss = 0.0;
  GradientSet grads;
};
BatchResult batch_gradient(const SknoModel& model, const Grid& grid, std::span<const int> samples, const Dataset& ds,
                           Rng& dropout_rng, int threads);

struct MetricsRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_rel_l2 = 0.0;
  double wall_seconds = 0.0;
  double lr = 0.0;
};
std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct TrainResult {
  SknoModel best;
  SknoModel last;
  std::vector<MetricsRow> metrics;
  double best_test_rel_l2 = 0.0;
  int best_epoch = 0;
};

/// Normalization is fitted on `train` before the first epoch. When `out_dir` is set the best
/// checkpoint is written to `<out_dir>/checkpoint` on every improvement and the metrics to
/// `<out_dir>/metrics.csv` at the end.
TrainResult train(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_set, const Dataset& test_set,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Each batch is drawn at one resolution from `resolutions` (seeded); samples are subsampled
/// from `train_set`, whose resolution must be a multiple of every entry. Evaluation runs on
/// `test_set` as given.
TrainResult train_mixed_resolution(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_set,
                                   const Dataset& test_set, const std::vector<int>& resolutions,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Point subsampling to `n` points per axis (`n` must divide the resolution), or exact Fourier
/// interpolation for 1D upsampling.
Dataset resample_dataset(const Dataset& ds, int n);

struct EvalResult {
  double mean_rel_l2 = 0.0;
  std::vector<double> per_sample;
  int resolution = 0;
  std::string csv() const;  // sample,rel_l2
};

/// Eval-mode forward over `ds`, resampled to `resolution` when it is nonzero.
EvalResult evaluate(const SknoModel& model, const Dataset& ds, int resolution = 0, int threads = 1);

/// Checks dataset channels and dimension against the architecture.
void check_compatible(const ArchConfig& arch, const Dataset& ds);

}  // namespace skno
