#pragma once

#include <complex>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skno/arch.hpp"
#include "skno/rng.hpp"
#include "skno/tensor.hpp"

namespace skno {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named real tensor. Complex weights are stored as separate `_re`/`_im` tensors.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
  bool learnable = true;

  std::size_t size() const { return data.size(); }
};

/// Ordered list of tensors. GradientSet reuses this layout with the same names and shapes.
class ParamSet {
 public:
  Param& add(std::string name, std::vector<int> shape, bool learnable = true);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  std::deque<Param>& all() { return params_; }
  const std::deque<Param>& all() const { return params_; }
  std::size_t learnable_count() const;

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  void add_scaled(const ParamSet& other, double scale);
  double squared_norm(bool learnable_only = true) const;

 private:
  std::deque<Param> params_;
  std::map<std::string, std::size_t> index_;
};

using GradientSet = ParamSet;

/// Retained spatial Fourier modes: the half set with nonnegative last-axis frequency.
struct ModeSet {
  std::vector<std::array<int, 2>> freq;  // signed frequencies, freq[h][1] >= 0 on the last axis
  int count() const { return static_cast<int>(freq.size()); }
};
ModeSet retained_modes(int d, int k);

class SknoModel {
 public:
  SknoModel() = default;
  /// Builds every parameter for `arch`, initialized from `seed`.
  SknoModel(const ArchConfig& arch, std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }
  const ModeSet& modes() const { return modes_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const Param& param(const std::string& name) const { return params_.at(name); }

  /// Zero-sum projection of every local stencil (applied after optimizer updates).
  void recenter_stencils();
  /// Sets the fixed input/output normalization buffers.
  void set_normalization(std::span<const double> in_mean, std::span<const double> in_std, double out_scale);

  void save(const std::filesystem::path& dir) const;
  /// Loads a checkpoint; if `expected` is given its hash must match arch.json.
  static SknoModel load(const std::filesystem::path& dir, const ArchConfig* expected = nullptr);

 private:
  ArchConfig arch_;
  ModeSet modes_;
  ParamSet params_;
};

/// Everything the adjoint pass needs from one batched forward call.
struct LayerRecord {
  Mat v_in;                                // [rows, P]
  std::vector<std::complex<double>> s;     // F_p F_x v on retained modes, [B, H, P]
  Mat local_d;                             // stencil output before p-mixing
  Mat res_pre, res_act;                    // residual MLP pre-activation and activation
  Mat h;                                   // pre-sigma
  Mat act_pre, act_act;                    // sigma MLP pre-activation and activation
};

struct Tape {
  bool recorded = false;
  Grid grid;
  int batch = 0;
  bool training = false;
  Mat input;                               // normalized input with positional features
  Mat lift_pre, lift_act;                  // mlp lifts
  Mat lift_mask;                           // dropout mask (scaled), mlp_dropout only
  std::vector<LayerRecord> layers;
  Mat v_out;                               // v_L
  Mat rec_pre, rec_act, rec_mask;
};

struct ForwardOptions {
  bool training = false;
  Rng* dropout_rng = nullptr;        // required when training with a dropout variant
  const Tape* replay_masks = nullptr;  // reuse dropout masks recorded on this tape
};

/// Batched forward. `a` is [batch, points, in_channels]; returns [batch, points, out_channels].
std::vector<double> forward_batch(const SknoModel& m, const Grid& grid, int batch, std::span<const double> a,
                                  const ForwardOptions& opt = {}, Tape* tape = nullptr);

/// Reverse pass seeded with dL/d(output). Optionally returns dL/d(input).
GradientSet backward_batch(const SknoModel& m, const Tape& tape, std::span<const double> upstream,
                           std::vector<double>* input_grad = nullptr);

/// Single-sample convenience wrapper.
Field forward(const SknoModel& m, const Field& a, bool training = false, Rng* dropout_rng = nullptr);

/// Minimum resolution accepted by forward for this architecture.
int minimum_resolution(const ArchConfig& arch);

}  // namespace skno
