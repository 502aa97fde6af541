#include "skno/train.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "skno/error.hpp"
#include "skno/generators.hpp"
#include "skno/loss.hpp"
#include "skno/parallel.hpp"
#include "skno/skt_io.hpp"

namespace skno {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw UsageError("lr0 must be positive");
  if (eval_every < 1) throw UsageError("eval_every must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},       {"batch_size", batch_size}, {"lr0", lr0},          {"seed", seed},
          {"eval_every", eval_every}, {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("train config must be a JSON object");
  static const std::array<std::string_view, 7> known{"epochs",     "batch_size", "lr0",    "seed",
                                                     "eval_every", "clip_norm",  "threads"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError("unknown train field '" + key + "'");
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr0 = j.value("lr0", c.lr0);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::type_error& e) {
    throw UsageError(std::string("train field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

void adam_step(SknoModel& model, const GradientSet& grads, AdamState& state, double lr) {
  auto& params = model.params().all();
  if (state.step == 0) {
    state.m = model.params().zeros_like();
    state.v = model.params().zeros_like();
  }
  if (grads.all().size() != params.size() || state.m.all().size() != params.size())
    throw UsageError("optimizer state does not match the model");
  ++state.step;
  const double c1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    Param& p = params[t];
    if (!p.learnable) continue;
    const auto& g = grads.all()[t].data;
    auto& m = state.m.all()[t].data;
    auto& v = state.v.all()[t].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * g[i];
      v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * g[i] * g[i];
      const double step = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + AdamState::eps);
      if (!std::isfinite(step)) throw NumericError("non-finite optimizer update in " + p.name);
      p.data[i] -= step;
    }
  }
  model.recenter_stencils();
}

double cosine_lr(double lr0, int epoch, int epochs) {
  if (epochs <= 1) return lr0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / (epochs - 1)));
}

double clip_gradients(GradientSet& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : grads.all())
      for (auto& x : p.data) x *= s;
  }
  return norm;
}

void fit_normalization(SknoModel& model, const Dataset& train) {
  const int C = train.a_channels;
  const double n = static_cast<double>(train.count) * static_cast<double>(train.grid.points());
  std::vector<double> mean(C, 0.0), stdv(C, 0.0);
  for (std::size_t i = 0; i < train.a.size(); ++i) mean[i % C] += train.a[i];
  for (auto& m : mean) m /= n;
  for (std::size_t i = 0; i < train.a.size(); ++i) {
    const double d = train.a[i] - mean[i % C];
    stdv[i % C] += d * d;
  }
  for (auto& s : stdv) {
    s = std::sqrt(s / n);
    if (!(s > 1e-12)) s = 1.0;
  }
  double rms = 0.0;
  for (double x : train.u) rms += x * x;
  rms = std::sqrt(rms / static_cast<double>(train.u.size()));
  if (!(rms > 1e-12)) rms = 1.0;
  model.set_normalization(mean, stdv, rms);
}

void check_compatible(const ArchConfig& arch, const Dataset& ds) {
  if (ds.count < 1) throw UsageError("dataset '" + ds.name + "' is empty");
  if (ds.grid.dims() != arch.d)
    throw UsageError("dataset '" + ds.name + "' is " + std::to_string(ds.grid.dims()) + "D, model expects " +
                     std::to_string(arch.d) + "D");
  if (ds.a_channels != arch.in_channels || ds.u_channels != arch.out_channels)
    throw UsageError("dataset '" + ds.name + "' channels do not match the model");
  for (int ax = 0; ax < arch.d; ++ax)
    if (ds.grid.resolution(ax) < minimum_resolution(arch))
      throw UsageError("dataset '" + ds.name + "' resolution is below 2 * modes");
}

BatchResult batch_gradient(const SknoModel& model, const Grid& grid, std::span<const int> samples, const Dataset& ds,
                           Rng& dropout_rng, int threads) {
  const int B = static_cast<int>(samples.size());
  const int chunks = std::max(1, std::min(threads, B));
  const std::uint64_t base = dropout_rng.next_u64();
  std::vector<double> losses(chunks);
  std::vector<GradientSet> grads(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const int lo = static_cast<int>(c) * B / chunks, hi = (static_cast<int>(c) + 1) * B / chunks;
    const int n = hi - lo;
    std::vector<double> a, u;
    a.reserve(n * ds.a_stride());
    u.reserve(n * ds.u_stride());
    for (int i = lo; i < hi; ++i) {
      const auto s = static_cast<std::size_t>(samples[i]);
      a.insert(a.end(), ds.a.begin() + s * ds.a_stride(), ds.a.begin() + (s + 1) * ds.a_stride());
      u.insert(u.end(), ds.u.begin() + s * ds.u_stride(), ds.u.begin() + (s + 1) * ds.u_stride());
    }
    Rng rng(derive_seed(base, c));
    ForwardOptions fo;
    fo.training = true;
    fo.dropout_rng = &rng;
    Tape tape;
    const auto pred = forward_batch(model, grid, n, a, fo, &tape);
    const auto loss = rel_l2_loss(pred, u, n);
    losses[c] = loss.loss * n / B;
    auto g = loss.grad;
    for (auto& x : g) x *= static_cast<double>(n) / B;
    grads[c] = backward_batch(model, tape, g);
  });
  BatchResult r{0.0, model.params().zeros_like()};
  for (int c = 0; c < chunks; ++c) {
    r.loss += losses[c];
    r.grads.add_scaled(grads[c], 1.0);
  }
  return r;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,test_rel_l2,wall_seconds,lr\n";
  for (const auto& r : rows)
    os << r.epoch << "," << r.train_loss << "," << r.test_rel_l2 << "," << r.wall_seconds << "," << r.lr << "\n";
  return os.str();
}

Dataset resample_dataset(const Dataset& ds, int n) {
  const int res = ds.grid.resolution(0);
  for (int ax = 1; ax < ds.grid.dims(); ++ax)
    if (ds.grid.resolution(ax) != res) throw UsageError("resampling needs equal resolution on every axis");
  if (n == res) return ds;
  if (n < 2) throw UsageError("resolution must be >= 2");
  const Grid g = ds.grid.with_resolution(n);
  Dataset out(ds.name, g, ds.count, ds.a_channels, ds.u_channels);
  out.meta = ds.meta;
  out.meta["resampled_from"] = res;
  if (res % n == 0) {
    const int stride = res / n;
    for (int i = 0; i < ds.count; ++i) {
      const Field a = ds.input(i), u = ds.target(i);
      Field ra(g, ds.a_channels), ru(g, ds.u_channels);
      for (std::size_t p = 0; p < g.points(); ++p) {
        std::size_t src;
        if (g.dims() == 1) src = p * stride;
        else src = (p / n) * stride * res + (p % n) * stride;
        for (int c = 0; c < ds.a_channels; ++c) ra.at(p, c) = a.at(src, c);
        for (int c = 0; c < ds.u_channels; ++c) ru.at(p, c) = u.at(src, c);
      }
      out.set_sample(i, ra, ru);
    }
    return out;
  }
  if (ds.grid.dims() != 1) throw UsageError("2D resampling requires a resolution dividing the dataset's");
  for (int i = 0; i < ds.count; ++i) out.set_sample(i, fourier_resample(ds.input(i), n), fourier_resample(ds.target(i), n));
  return out;
}

std::string EvalResult::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "sample,rel_l2\n";
  for (std::size_t i = 0; i < per_sample.size(); ++i) os << i << "," << per_sample[i] << "\n";
  return os.str();
}

EvalResult evaluate(const SknoModel& model, const Dataset& ds, int resolution, int threads) {
  if (ds.count < 1) throw UsageError("dataset '" + ds.name + "' is empty");
  Dataset resampled;
  const bool resample = resolution != 0 && resolution != ds.grid.resolution(0);
  if (resample) resampled = resample_dataset(ds, resolution);
  const Dataset& d = resample ? resampled : ds;
  check_compatible(model.arch(), d);
  EvalResult r;
  r.resolution = d.grid.resolution(0);
  r.per_sample.resize(d.count);
  parallel_for(static_cast<std::size_t>(d.count), threads, [&](std::size_t i) {
    const auto a = std::span(d.a).subspan(i * d.a_stride(), d.a_stride());
    const auto u = std::span(d.u).subspan(i * d.u_stride(), d.u_stride());
    r.per_sample[i] = rel_l2_loss(forward_batch(model, d.grid, 1, a), u, 1, false).loss;
  });
  r.mean_rel_l2 = std::accumulate(r.per_sample.begin(), r.per_sample.end(), 0.0) / d.count;
  return r;
}

TrainResult train_mixed_resolution(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_set,
                                   const Dataset& test_set, const std::vector<int>& resolutions,
                                   const std::optional<fs::path>& out_dir) {
  cfg.validate();
  arch.validate();
  check_compatible(arch, train_set);
  check_compatible(arch, test_set);
  if (resolutions.empty()) throw UsageError("resolution list is empty");
  std::vector<Dataset> levels;
  for (int n : resolutions) {
    if (n < minimum_resolution(arch)) throw UsageError("training resolution " + std::to_string(n) + " is below 2 * modes");
    if (train_set.grid.resolution(0) % n != 0)
      throw UsageError("training resolution " + std::to_string(n) + " does not divide the dataset resolution");
    levels.push_back(resample_dataset(train_set, n));
  }

  TrainResult res;
  SknoModel model(arch, derive_seed(cfg.seed, 1));
  fit_normalization(model, train_set);
  Rng shuffle_rng(derive_seed(cfg.seed, 2)), dropout_rng(derive_seed(cfg.seed, 3)), level_rng(derive_seed(cfg.seed, 4));
  AdamState state;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> order(train_set.count);
  res.best_test_rel_l2 = std::numeric_limits<double>::infinity();
  if (out_dir) fs::create_directories(*out_dir);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(cfg.lr0, epoch, cfg.epochs);
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (int start = 0; start < train_set.count; start += cfg.batch_size) {
      const int n = std::min(cfg.batch_size, train_set.count - start);
      const std::size_t li = levels.size() == 1 ? 0 : level_rng.below(levels.size());
      const Dataset& ds = levels[li];
      auto batch = batch_gradient(model, ds.grid, std::span(order).subspan(start, n), ds, dropout_rng, cfg.threads);
      if (cfg.clip_norm > 0.0) clip_gradients(batch.grads, cfg.clip_norm);
      adam_step(model, batch.grads, state, lr);
      epoch_loss += batch.loss * n;
    }
    const bool last = epoch == cfg.epochs - 1;
    if ((epoch + 1) % cfg.eval_every != 0 && !last) continue;
    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / train_set.count;
    row.test_rel_l2 = evaluate(model, test_set, 0, cfg.threads).mean_rel_l2;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.lr = lr;
    if (!std::isfinite(row.train_loss) || !std::isfinite(row.test_rel_l2))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    res.metrics.push_back(row);
    if (row.test_rel_l2 < res.best_test_rel_l2) {
      res.best_test_rel_l2 = row.test_rel_l2;
      res.best_epoch = epoch;
      res.best = model;
      if (out_dir) model.save(*out_dir / "checkpoint");
    }
    if (out_dir) write_text_atomic(*out_dir / "metrics.csv", metrics_csv(res.metrics));
  }
  res.last = model;
  return res;
}

TrainResult train(const TrainConfig& cfg, const ArchConfig& arch, const Dataset& train_set, const Dataset& test_set,
                  const std::optional<fs::path>& out_dir) {
  return train_mixed_resolution(cfg, arch, train_set, test_set, {train_set.grid.resolution(0)}, out_dir);
}

}  // namespace skno
