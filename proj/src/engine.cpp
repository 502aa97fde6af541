#include <cmath>

#include "kernels.hpp"
#include "skno/error.hpp"
#include "skno/model.hpp"

namespace skno {

using namespace detail;

namespace {

std::string layer_name(int l) { return "layer" + std::to_string(l); }

void check_finite(const Mat& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite values in " + where);
}

Mat dropout_mask(const Tape* replay, const Mat Tape::*member, Rng* rng, Eigen::Index rows, Eigen::Index cols,
                 double rate) {
  if (replay) {
    const Mat& m = replay->*member;
    if (m.rows() != rows || m.cols() != cols) throw UsageError("replayed dropout mask has the wrong shape");
    return m;
  }
  if (!rng) throw UsageError("training with dropout needs a random generator");
  Mat m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform() < rate ? 0.0 : keep;
  return m;
}

// y = gelu(x W1 + b1) [* mask] W2 + b2
struct MlpOut {
  Mat pre, act, y;
};

MlpOut mlp_forward(const ParamSet& ps, const std::string& prefix, const Mat& x, const Mat* mask) {
  const auto& w1 = ps.at(prefix + ".w1");
  const auto& w2 = ps.at(prefix + ".w2");
  MlpOut o;
  o.pre = x * view(w1, w1.shape[0], w1.shape[1]);
  o.pre.rowwise() += row_view(ps.at(prefix + ".b1"));
  o.act = gelu(o.pre);
  if (mask) o.act.array() *= mask->array();
  o.y = o.act * view(w2, w2.shape[0], w2.shape[1]);
  o.y.rowwise() += row_view(ps.at(prefix + ".b2"));
  return o;
}

// Returns dL/dx; accumulates parameter gradients.
Mat mlp_backward(const ParamSet& ps, GradientSet& gs, const std::string& prefix, const Mat& x, const Mat& pre,
                 const Mat& act, const Mat* mask, const Mat& g_y) {
  const auto& w1 = ps.at(prefix + ".w1");
  const auto& w2 = ps.at(prefix + ".w2");
  auto& g_w1 = gs.at(prefix + ".w1");
  auto& g_w2 = gs.at(prefix + ".w2");
  view(g_w2, w2.shape[0], w2.shape[1]).noalias() += act.transpose() * g_y;
  view(gs.at(prefix + ".b2"), 1, w2.shape[1]) += g_y.colwise().sum();
  Mat g_act = g_y * view(w2, w2.shape[0], w2.shape[1]).transpose();
  if (mask) g_act.array() *= mask->array();
  Mat g_pre = g_act.cwiseProduct(gelu_grad(pre));
  view(g_w1, w1.shape[0], w1.shape[1]).noalias() += x.transpose() * g_pre;
  view(gs.at(prefix + ".b1"), 1, w1.shape[1]) += g_pre.colwise().sum();
  return g_pre * view(w1, w1.shape[0], w1.shape[1]).transpose();
}

bool lift_is_mlp(const ArchConfig& a) { return a.lift_kind == LiftKind::mlp || a.lift_kind == LiftKind::mlp_dropout; }
bool recover_is_mlp(const ArchConfig& a) {
  return a.recover_kind == RecoverKind::mlp || a.recover_kind == RecoverKind::mlp_dropout;
}

}  // namespace

int minimum_resolution(const ArchConfig& arch) {
  int n = 2 * arch.modes;
  if (arch.with_local_propagator) n = std::max(n, 3);
  return n;
}

std::vector<double> forward_batch(const SknoModel& m, const Grid& grid, int batch, std::span<const double> a,
                                  const ForwardOptions& opt, Tape* tape) {
  const ArchConfig& arch = m.arch();
  const ParamSet& ps = m.params();
  if (grid.dims() != arch.d)
    throw UsageError("input is " + std::to_string(grid.dims()) + "D but the model is " + std::to_string(arch.d) + "D");
  for (int ax = 0; ax < grid.dims(); ++ax)
    if (grid.resolution(ax) < minimum_resolution(arch))
      throw UsageError("resolution " + std::to_string(grid.resolution(ax)) + " is below the minimum " +
                       std::to_string(minimum_resolution(arch)) + " for " + std::to_string(arch.modes) + " modes");
  const std::size_t X = grid.points();
  const Eigen::Index rows = static_cast<Eigen::Index>(X) * batch;
  const int Cin = arch.in_channels;
  if (a.size() != static_cast<std::size_t>(rows) * Cin)
    throw UsageError("input has " + std::to_string(a.size()) + " values, expected " +
                     std::to_string(static_cast<std::size_t>(rows) * Cin) + " (channel mismatch?)");
  const bool train = opt.training;
  const Tape* replay = opt.replay_masks;

  Tape local;
  Tape& t = tape ? *tape : local;
  t = Tape{};
  t.grid = grid;
  t.batch = batch;
  t.training = train;

  const auto& mean = ps.at("norm.in_mean").data;
  const auto& stdv = ps.at("norm.in_std").data;
  const int C = arch.lifted_channels();
  t.input.resize(rows, C);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < Cin; ++c) t.input(r, c) = (a[r * Cin + c] - mean[c]) / stdv[c];
    if (arch.with_positional_features)
      for (int ax = 0; ax < arch.d; ++ax) t.input(r, Cin + ax) = grid_coordinate(grid, r % X, ax);
  }
  check_finite(t.input, "input");

  Mat v;
  if (lift_is_mlp(arch)) {
    const bool drop = train && arch.lift_kind == LiftKind::mlp_dropout && arch.dropout > 0.0;
    if (drop) t.lift_mask = dropout_mask(replay, &Tape::lift_mask, opt.dropout_rng, rows, arch.n_p, arch.dropout);
    auto o = mlp_forward(ps, "lift", t.input, drop ? &t.lift_mask : nullptr);
    t.lift_pre = std::move(o.pre);
    t.lift_act = std::move(o.act);
    v = std::move(o.y);
  } else {
    const auto& w = ps.at("lift.w");
    v = t.input * view(w, w.shape[0], w.shape[1]);
  }
  check_finite(v, "lift");

  const int P = arch.n_p;
  t.layers.resize(arch.n_layers);
  for (int l = 0; l < arch.n_layers; ++l) {
    LayerRecord& rec = t.layers[l];
    const std::string pre = layer_name(l);
    rec.v_in = std::move(v);
    Mat h = Mat::Zero(rows, P);
    if (arch.is_local_layer(l)) {
      rec.local_d = stencil_forward(rec.v_in, grid, batch, ps.at(pre + ".stencil"));
      h.noalias() += rec.local_d * view(ps.at(pre + ".mix"), P, P);
    } else if (arch.with_global_propagators) {
      if (arch.with_a_tilde)
        spectral_forward(rec.v_in, grid, batch, m.modes(), arch.a_tilde_form, ps.at(pre + ".a_re"),
                         ps.at(pre + ".a_im"), h, &rec.s);
      if (arch.with_bias_b) h.noalias() += rec.v_in * view(ps.at(pre + ".b"), P, P);
    }
    if (arch.with_linear_residual) {
      auto o = mlp_forward(ps, pre + ".res", rec.v_in, nullptr);
      h += rec.v_in + o.y;
      rec.res_pre = std::move(o.pre);
      rec.res_act = std::move(o.act);
    }
    check_finite(h, pre + " (linear block)");
    if (arch.with_nonlinear_residual) {
      auto o = mlp_forward(ps, pre + ".act", h, nullptr);
      v = h + o.y;
      rec.act_pre = std::move(o.pre);
      rec.act_act = std::move(o.act);
    } else {
      v = gelu(h);
    }
    rec.h = std::move(h);
    check_finite(v, pre + " (activation)");
  }

  Mat y;
  if (recover_is_mlp(arch)) {
    const bool drop = train && arch.recover_kind == RecoverKind::mlp_dropout && arch.dropout > 0.0;
    if (drop) t.rec_mask = dropout_mask(replay, &Tape::rec_mask, opt.dropout_rng, rows, P, arch.dropout);
    auto o = mlp_forward(ps, "recover", v, drop ? &t.rec_mask : nullptr);
    t.rec_pre = std::move(o.pre);
    t.rec_act = std::move(o.act);
    y = std::move(o.y);
  } else {
    y = v * view(ps.at("recover.chi"), P, arch.out_channels);
  }
  y *= ps.at("norm.out_scale").data[0];
  check_finite(y, "recovery");
  t.v_out = std::move(v);
  t.recorded = true;
  return std::vector<double>(y.data(), y.data() + y.size());
}

GradientSet backward_batch(const SknoModel& m, const Tape& t, std::span<const double> upstream,
                           std::vector<double>* input_grad) {
  if (!t.recorded) throw UsageError("backward needs a tape recorded by forward");
  const ArchConfig& arch = m.arch();
  const ParamSet& ps = m.params();
  GradientSet gs = ps.zeros_like();
  const Eigen::Index rows = t.v_out.rows();
  const int P = arch.n_p;
  const int U = arch.out_channels;
  if (upstream.size() != static_cast<std::size_t>(rows) * U) throw UsageError("upstream gradient has the wrong size");

  Mat g_y = MapC(upstream.data(), rows, U) * ps.at("norm.out_scale").data[0];
  Mat g;
  if (recover_is_mlp(arch)) {
    const bool drop = t.rec_mask.size() > 0;
    g = mlp_backward(ps, gs, "recover", t.v_out, t.rec_pre, t.rec_act, drop ? &t.rec_mask : nullptr, g_y);
  } else {
    view(gs.at("recover.chi"), P, U).noalias() += t.v_out.transpose() * g_y;
    g = g_y * view(ps.at("recover.chi"), P, U).transpose();
  }

  for (int l = arch.n_layers - 1; l >= 0; --l) {
    const LayerRecord& rec = t.layers[l];
    const std::string pre = layer_name(l);
    Mat g_h;
    if (arch.with_nonlinear_residual) {
      g_h = g + mlp_backward(ps, gs, pre + ".act", rec.h, rec.act_pre, rec.act_act, nullptr, g);
    } else {
      g_h = g.cwiseProduct(gelu_grad(rec.h));
    }
    Mat g_v = Mat::Zero(rows, P);
    if (arch.with_linear_residual) {
      g_v += g_h;
      g_v += mlp_backward(ps, gs, pre + ".res", rec.v_in, rec.res_pre, rec.res_act, nullptr, g_h);
    }
    if (arch.is_local_layer(l)) {
      view(gs.at(pre + ".mix"), P, P).noalias() += rec.local_d.transpose() * g_h;
      Mat g_d = g_h * view(ps.at(pre + ".mix"), P, P).transpose();
      stencil_backward(g_d, rec.v_in, t.grid, t.batch, ps.at(pre + ".stencil"), gs.at(pre + ".stencil"), g_v);
    } else if (arch.with_global_propagators) {
      if (arch.with_a_tilde)
        spectral_backward(g_h, t.grid, t.batch, m.modes(), arch.a_tilde_form, ps.at(pre + ".a_re"),
                          ps.at(pre + ".a_im"), rec.s, gs.at(pre + ".a_re"), gs.at(pre + ".a_im"), g_v);
      if (arch.with_bias_b) {
        view(gs.at(pre + ".b"), P, P).noalias() += rec.v_in.transpose() * g_h;
        g_v.noalias() += g_h * view(ps.at(pre + ".b"), P, P).transpose();
      }
    }
    g = std::move(g_v);
  }

  Mat g_in;
  if (lift_is_mlp(arch)) {
    const bool drop = t.lift_mask.size() > 0;
    g_in = mlp_backward(ps, gs, "lift", t.input, t.lift_pre, t.lift_act, drop ? &t.lift_mask : nullptr, g);
  } else {
    const auto& w = ps.at("lift.w");
    view(gs.at("lift.w"), w.shape[0], w.shape[1]).noalias() += t.input.transpose() * g;
    g_in = g * view(w, w.shape[0], w.shape[1]).transpose();
  }

  for (auto& p : gs.all()) {
    if (!p.learnable) {
      std::fill(p.data.begin(), p.data.end(), 0.0);
      continue;
    }
    for (double v : p.data)
      if (!std::isfinite(v)) throw NumericError("non-finite gradient for parameter " + p.name);
  }
  if (input_grad) {
    const int Cin = arch.in_channels;
    const auto& stdv = ps.at("norm.in_std").data;
    input_grad->resize(static_cast<std::size_t>(rows) * Cin);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (int c = 0; c < Cin; ++c) (*input_grad)[r * Cin + c] = g_in(r, c) / stdv[c];
  }
  return gs;
}

Field forward(const SknoModel& m, const Field& a, bool training, Rng* dropout_rng) {
  ForwardOptions opt;
  opt.training = training;
  opt.dropout_rng = dropout_rng;
  auto y = forward_batch(m, a.grid(), 1, a.values(), opt);
  return Field(a.grid(), m.arch().out_channels, std::move(y));
}

}  // namespace skno

// ---- single-block entry points ----

#include "skno/blocks.hpp"
#include "skno/fft.hpp"

namespace skno {
namespace {

Mat as_mat(const Field& f) { return MapC(f.values().data(), static_cast<Eigen::Index>(f.points()), f.aux_len()); }

Field as_field(const Grid& g, const Mat& m) {
  return Field(g, static_cast<int>(m.cols()), std::vector<double>(m.data(), m.data() + m.size()));
}

void require_layer(const SknoModel& m, int layer, const Field& v) {
  if (layer < 0 || layer >= m.arch().n_layers) throw UsageError("layer index out of range");
  if (v.aux_len() != m.arch().n_p) throw UsageError("field aux length does not match n_p");
  if (v.grid().dims() != m.arch().d) throw UsageError("field dimension does not match the model");
}

}  // namespace

Field lift(const SknoModel& m, const Field& a, bool training, Rng* dropout_rng) {
  Tape t;
  ForwardOptions opt;
  opt.training = training;
  opt.dropout_rng = dropout_rng;
  forward_batch(m, a.grid(), 1, a.values(), opt, &t);
  return as_field(a.grid(), t.layers[0].v_in);
}

std::vector<cdouble> p_mix(std::span<const cdouble> z, ATildeForm form, std::span<const double> a_re,
                           std::span<const double> a_im) {
  const int P = static_cast<int>(z.size());
  const std::size_t need = form == ATildeForm::diag ? z.size() : z.size() * z.size();
  if (a_re.size() != need || a_im.size() != need) throw UsageError("p_mix weight shape mismatch");
  std::vector<cdouble> s(z.begin(), z.end());
  fft_rows_inplace(s, P, 1, FftDirection::forward);
  std::vector<cdouble> t(P);
  for (int i = 0; i < P; ++i) {
    if (form == ATildeForm::diag) {
      t[i] = cdouble(a_re[i], a_im[i]) * s[i];
    } else {
      for (int j = 0; j < P; ++j) t[i] += cdouble(a_re[i * P + j], a_im[i * P + j]) * s[j];
    }
  }
  fft_rows_inplace(t, P, 1, FftDirection::inverse);
  for (auto& x : t) x /= static_cast<double>(P);
  return t;
}

Field layer_kernel(const SknoModel& m, int layer, const Field& v) {
  require_layer(m, layer, v);
  const ArchConfig& arch = m.arch();
  const ParamSet& ps = m.params();
  const std::string pre = layer_name(layer);
  const int P = arch.n_p;
  const Mat vin = as_mat(v);
  Mat h = Mat::Zero(vin.rows(), P);
  if (arch.is_local_layer(layer)) {
    h = stencil_forward(vin, v.grid(), 1, ps.at(pre + ".stencil")) * view(ps.at(pre + ".mix"), P, P);
  } else if (arch.with_global_propagators) {
    if (arch.with_a_tilde)
      spectral_forward(vin, v.grid(), 1, m.modes(), arch.a_tilde_form, ps.at(pre + ".a_re"), ps.at(pre + ".a_im"), h,
                       nullptr);
    if (arch.with_bias_b) h.noalias() += vin * view(ps.at(pre + ".b"), P, P);
  }
  return as_field(v.grid(), h);
}

Field layer_forward(const SknoModel& m, int layer, const Field& v) {
  const ArchConfig& arch = m.arch();
  const std::string pre = layer_name(layer);
  Field k = layer_kernel(m, layer, v);
  Mat h = as_mat(k);
  const Mat vin = as_mat(v);
  if (arch.with_linear_residual) h += vin + mlp_forward(m.params(), pre + ".res", vin, nullptr).y;
  Mat out = arch.with_nonlinear_residual ? Mat(h + mlp_forward(m.params(), pre + ".act", h, nullptr).y) : gelu(h);
  return as_field(v.grid(), out);
}

Field recover_q(const SknoModel& m, const Field& v, bool training, Rng* dropout_rng) {
  const ArchConfig& arch = m.arch();
  if (v.aux_len() != arch.n_p) throw UsageError("field aux length does not match n_p");
  const int P = arch.n_p;
  const Mat vin = as_mat(v);
  Mat y;
  if (recover_is_mlp(arch)) {
    Mat mask;
    const bool drop = training && arch.recover_kind == RecoverKind::mlp_dropout && arch.dropout > 0.0;
    if (drop) mask = dropout_mask(nullptr, &Tape::rec_mask, dropout_rng, vin.rows(), P, arch.dropout);
    y = mlp_forward(m.params(), "recover", vin, drop ? &mask : nullptr).y;
  } else {
    y = vin * view(m.params().at("recover.chi"), P, arch.out_channels);
  }
  y *= m.params().at("norm.out_scale").data[0];
  return as_field(v.grid(), y);
}

}  // namespace skno
