#include "skno/model.hpp"

#include <fstream>

#include "skno/error.hpp"
#include "skno/skt_io.hpp"

namespace skno {
namespace fs = std::filesystem;

Param& ParamSet::add(std::string name, std::vector<int> shape, bool learnable) {
  if (has(name)) throw UsageError("duplicate parameter " + name);
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  index_[name] = params_.size();
  params_.push_back(Param{std::move(name), std::move(shape), std::vector<double>(n, 0.0), learnable});
  return params_.back();
}

Param& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("no parameter named " + name);
  return params_[it->second];
}

const Param& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("no parameter named " + name);
  return params_[it->second];
}

std::size_t ParamSet::learnable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.learnable) n += p.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  for (const auto& p : params_) z.add(p.name, p.shape, p.learnable);
  return z;
}

void ParamSet::add_scaled(const ParamSet& other, double scale) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    for (std::size_t j = 0; j < params_[i].size(); ++j) params_[i].data[j] += scale * other.params_[i].data[j];
}

double ParamSet::squared_norm(bool learnable_only) const {
  double s = 0.0;
  for (const auto& p : params_)
    if (p.learnable || !learnable_only)
      for (double v : p.data) s += v * v;
  return s;
}

ModeSet retained_modes(int d, int k) {
  ModeSet m;
  if (d == 1) {
    for (int f = 0; f <= k; ++f) m.freq.push_back({f, 0});
  } else {
    for (int f0 = -k; f0 <= k; ++f0)
      for (int f1 = 0; f1 <= k; ++f1) m.freq.push_back({f0, f1});
  }
  return m;
}

namespace {

void fill_uniform(Param& p, Rng& rng, double bound) {
  for (auto& v : p.data) v = rng.uniform(-bound, bound);
}

// Shallow map in -> hidden -> out, PyTorch-style uniform(+-1/sqrt(fan_in)) init.
void add_mlp(ParamSet& ps, Rng& rng, const std::string& prefix, int in, int hidden, int out) {
  fill_uniform(ps.add(prefix + ".w1", {in, hidden}), rng, 1.0 / std::sqrt(in));
  fill_uniform(ps.add(prefix + ".b1", {hidden}), rng, 1.0 / std::sqrt(in));
  fill_uniform(ps.add(prefix + ".w2", {hidden, out}), rng, 1.0 / std::sqrt(hidden));
  fill_uniform(ps.add(prefix + ".b2", {out}), rng, 1.0 / std::sqrt(hidden));
}


}  // namespace

SknoModel::SknoModel(const ArchConfig& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  modes_ = retained_modes(arch_.d, arch_.modes);
  Rng rng(seed);
  const int P = arch_.n_p;
  const int C = arch_.lifted_channels();
  const int H = modes_.count();

  auto& mean = params_.add("norm.in_mean", {arch_.in_channels}, false);
  (void)mean;
  auto& stdv = params_.add("norm.in_std", {arch_.in_channels}, false);
  std::fill(stdv.data.begin(), stdv.data.end(), 1.0);
  params_.add("norm.out_scale", {1}, false).data[0] = 1.0;

  switch (arch_.lift_kind) {
    case LiftKind::constant: {
      auto& w = params_.add("lift.w", {C, P}, false);
      std::fill(w.data.begin(), w.data.end(), 1.0 / C);
      break;
    }
    case LiftKind::linear:
      fill_uniform(params_.add("lift.w", {C, P}), rng, 1.0 / std::sqrt(C));
      break;
    case LiftKind::mlp:
    case LiftKind::mlp_dropout:
      add_mlp(params_, rng, "lift", C, P, P);
      break;
  }

  for (int l = 0; l < arch_.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l);
    if (arch_.is_local_layer(l)) {
      auto& st = params_.add(pre + ".stencil", {arch_.d, P, 3});
      for (std::size_t i = 0; i < st.size(); i += 3) {
        st.data[i] = -0.5;
        st.data[i + 2] = 0.5;
      }
      fill_uniform(params_.add(pre + ".mix", {P, P}), rng, 1.0 / std::sqrt(P));
    } else if (arch_.with_global_propagators) {
      if (arch_.with_a_tilde) {
        if (arch_.a_tilde_form == ATildeForm::diag) {
          auto& re = params_.add(pre + ".a_re", {H, P});
          auto& im = params_.add(pre + ".a_im", {H, P});
          fill_uniform(re, rng, 1.0 / std::sqrt(P));
          fill_uniform(im, rng, 1.0 / std::sqrt(P));
        } else {
          auto& re = params_.add(pre + ".a_re", {H, P, P});
          auto& im = params_.add(pre + ".a_im", {H, P, P});
          fill_uniform(re, rng, 1.0 / P);
          fill_uniform(im, rng, 1.0 / P);
        }
      }
      if (arch_.with_bias_b) fill_uniform(params_.add(pre + ".b", {P, P}), rng, 1.0 / std::sqrt(P));
    }
    if (arch_.with_linear_residual) add_mlp(params_, rng, pre + ".res", P, P, P);
    if (arch_.with_nonlinear_residual) add_mlp(params_, rng, pre + ".act", P, P, P);
  }

  const int U = arch_.out_channels;
  switch (arch_.recover_kind) {
    case RecoverKind::delta:
      params_.add("recover.chi", {P, 1}, false).data[P / 2] = 1.0;
      break;
    case RecoverKind::step: {
      auto& chi = params_.add("recover.chi", {P, 1}, false);
      for (int p = P / 2; p < P; ++p) chi.data[p] = 1.0 / (P - P / 2);
      break;
    }
    case RecoverKind::mean: {
      auto& chi = params_.add("recover.chi", {P, 1}, false);
      std::fill(chi.data.begin(), chi.data.end(), 1.0 / P);
      break;
    }
    case RecoverKind::linear:
      fill_uniform(params_.add("recover.chi", {P, U}), rng, 1.0 / std::sqrt(P));
      break;
    case RecoverKind::mlp:
    case RecoverKind::mlp_dropout:
      add_mlp(params_, rng, "recover", P, P, U);
      break;
  }
}

void SknoModel::recenter_stencils() {
  for (int l = 0; l < arch_.n_layers; ++l) {
    if (!arch_.is_local_layer(l)) continue;
    auto& st = params_.at("layer" + std::to_string(l) + ".stencil");
    for (std::size_t i = 0; i < st.size(); i += 3) {
      const double mean = (st.data[i] + st.data[i + 1] + st.data[i + 2]) / 3.0;
      for (int o = 0; o < 3; ++o) st.data[i + o] -= mean;
    }
  }
}

void SknoModel::set_normalization(std::span<const double> in_mean, std::span<const double> in_std, double out_scale) {
  auto& m = params_.at("norm.in_mean");
  auto& s = params_.at("norm.in_std");
  if (in_mean.size() != m.size() || in_std.size() != s.size()) throw UsageError("normalization size mismatch");
  for (double v : in_std)
    if (!(v > 0.0)) throw UsageError("normalization std must be positive");
  if (!(out_scale > 0.0)) throw UsageError("output scale must be positive");
  std::copy(in_mean.begin(), in_mean.end(), m.data.begin());
  std::copy(in_std.begin(), in_std.end(), s.data.begin());
  params_.at("norm.out_scale").data[0] = out_scale;
}

void SknoModel::save(const fs::path& dir) const {
  fs::create_directories(dir);
  for (const auto& p : params_.all()) {
    std::vector<std::uint64_t> shape(p.shape.begin(), p.shape.end());
    write_skt(dir / (p.name + ".skt"), make_real_tensor(shape, p.data));
  }
  nlohmann::json j;
  j["arch"] = arch_.to_json();
  j["arch_hash"] = arch_.hash();
  nlohmann::json names = nlohmann::json::array();
  for (const auto& p : params_.all()) names.push_back(p.name);
  j["tensors"] = names;
  write_text_atomic(dir / "arch.json", j.dump(2) + "\n");
}

SknoModel SknoModel::load(const fs::path& dir, const ArchConfig* expected) {
  std::ifstream in(dir / "arch.json");
  if (!in) throw UsageError("no arch.json in checkpoint " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("malformed arch.json: " + std::string(e.what()));
  }
  const ArchConfig arch = ArchConfig::from_json(j.at("arch"));
  if (j.value("arch_hash", std::string()) != arch.hash())
    throw UsageError("checkpoint arch hash does not match its arch.json contents");
  if (expected && expected->hash() != arch.hash())
    throw UsageError("checkpoint arch hash " + arch.hash() + " does not match expected " + expected->hash());
  SknoModel m(arch, 0);
  for (auto& p : m.params_.all()) {
    const auto t = read_skt(dir / (p.name + ".skt"));
    if (t.dtype != SktDtype::real64 || t.real.size() != p.size())
      throw UsageError("checkpoint tensor " + p.name + " has the wrong shape");
    p.data = t.real;
  }
  return m;
}

}  // namespace skno
