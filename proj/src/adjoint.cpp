#include "skno/adjoint.hpp"

#include <cmath>
#include <sstream>

#include "skno/blocks.hpp"
#include "skno/error.hpp"
#include "skno/loss.hpp"

namespace skno {

std::string GradCheckReport::csv() const {
  std::ostringstream os;
  os.precision(6);
  os << std::scientific << "tensor,analytic_norm,fd_norm,max_rel_error,pass\n";
  for (const auto& r : rows)
    os << r.tensor << "," << r.analytic_norm << "," << r.fd_norm << "," << r.max_rel_error << ","
       << (r.pass ? "true" : "false") << "\n";
  return os.str();
}

GradCheckReport grad_check(const SknoModel& model, const Grid& grid, int batch, std::span<const double> a,
                           std::span<const double> u, const GradCheckOptions& opt) {
  if (!(opt.eps >= 1e-7 && opt.eps <= 1e-3)) throw UsageError("grad_check eps must lie in [1e-7, 1e-3]");
  SknoModel m = model;
  Rng rng(opt.dropout_seed);
  Tape tape;
  ForwardOptions fo;
  fo.training = opt.training;
  fo.dropout_rng = &rng;
  auto pred = forward_batch(m, grid, batch, a, fo, &tape);
  auto loss = rel_l2_loss(pred, u, batch);
  GradientSet g = backward_batch(m, tape, loss.grad);
  if (opt.corrupt) opt.corrupt(g);

  ForwardOptions replay;
  replay.training = opt.training;
  replay.replay_masks = &tape;
  auto eval = [&] { return rel_l2_loss(forward_batch(m, grid, batch, a, replay), u, batch, false).loss; };

  GradCheckReport rep;
  auto& params = m.params().all();
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    Param& p = params[ti];
    if (!p.learnable) continue;
    const auto& ga = g.all()[ti].data;
    std::vector<double> fd(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.data[i];
      p.data[i] = orig + opt.eps;
      const double lp = eval();
      p.data[i] = orig - opt.eps;
      const double lm = eval();
      p.data[i] = orig;
      fd[i] = (lp - lm) / (2.0 * opt.eps);
    }
    GradCheckRow row;
    row.tensor = p.name;
    double scale = opt.scale_floor, worst = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      scale = std::max({scale, std::abs(fd[i]), std::abs(ga[i])});
      na += ga[i] * ga[i];
      nf += fd[i] * fd[i];
    }
    for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, std::abs(ga[i] - fd[i]) / scale);
    row.analytic_norm = std::sqrt(na);
    row.fd_norm = std::sqrt(nf);
    row.max_rel_error = worst;
    row.pass = worst < opt.tolerance;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

AdjointReport adjoint_identity_check(const SknoModel& model, const Grid& grid, int draws, std::uint64_t seed) {
  const ArchConfig& arch = model.arch();
  if (arch.recover_kind != RecoverKind::linear) throw UsageError("adjoint identity check needs linear recovery");
  const int P = arch.n_p, U = arch.out_channels, Cin = arch.in_channels;
  const std::size_t X = grid.points();
  const auto& chi = model.param("recover.chi").data;
  const double out_scale = model.param("norm.out_scale").data[0];
  const auto& mean = model.param("norm.in_mean").data;
  const auto& stdv = model.param("norm.in_std").data;
  // the lift is linear in a only without positional channels and input shift
  bool lift_linear = (arch.lift_kind == LiftKind::linear || arch.lift_kind == LiftKind::constant) &&
                     !arch.with_positional_features;
  for (double m : mean) lift_linear = lift_linear && m == 0.0;
  Rng rng(seed);
  AdjointReport rep;
  rep.draws = draws;
  rep.lift_checked = lift_linear;
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300}); };

  for (int d = 0; d < draws; ++d) {
    std::vector<double> v(X * P), r(X * U);
    for (auto& x : v) x = rng.normal();
    for (auto& x : r) x = rng.normal();
    const Field qv = recover_q(model, Field(grid, P, v));
    double lhs = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) lhs += qv.values()[i] * r[i];
    // Q*[r](x, p) = chi(p) r(x)
    double rhs = 0.0;
    for (std::size_t x = 0; x < X; ++x)
      for (int p = 0; p < P; ++p) {
        double qs = 0.0;
        for (int c = 0; c < U; ++c) qs += out_scale * chi[p * U + c] * r[x * U + c];
        rhs += v[x * P + p] * qs;
      }
    rep.recover_max_rel = std::max(rep.recover_max_rel, rel(lhs, rhs));

    if (lift_linear) {
      const auto& w = model.param("lift.w").data;
      std::vector<double> av(X * Cin), wv(X * P);
      for (auto& x : av) x = rng.normal();
      for (auto& x : wv) x = rng.normal();
      const Field pa = lift(model, Field(grid, Cin, av));
      double l2 = 0.0;
      for (std::size_t i = 0; i < wv.size(); ++i) l2 += pa.values()[i] * wv[i];
      // P*[w](x, c) = sum_p W(c, p) w(x, p) / std_c
      double r2 = 0.0;
      for (std::size_t x = 0; x < X; ++x)
        for (int c = 0; c < Cin; ++c) {
          double back = 0.0;
          for (int p = 0; p < P; ++p) back += w[c * P + p] * wv[x * P + p];
          r2 += av[x * Cin + c] * back / stdv[c];
        }
      rep.lift_max_rel = std::max(rep.lift_max_rel, rel(l2, r2));
    }
  }
  return rep;
}

}  // namespace skno
