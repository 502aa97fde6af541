#include "skno/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "skno/error.hpp"
#include "skno/fft.hpp"

namespace skno {
namespace {

void require_single_channel(const Field& u0) {
  if (u0.aux_len() != 1) throw UsageError("phase lift expects a single-channel field");
}

double angular(int bin, int n, double length) {
  return 2.0 * std::numbers::pi * signed_frequency(bin, n) / length;
}

double squared_wavenumber(const Grid& g, std::size_t pt) {
  if (g.dims() == 1) {
    const double k = angular(static_cast<int>(pt), g.resolution(0), g.length(0));
    return k * k;
  }
  const int n1 = g.resolution(1);
  const double k0 = angular(static_cast<int>(pt) / n1, g.resolution(0), g.length(0));
  const double k1 = angular(static_cast<int>(pt) % n1, n1, g.length(1));
  return k0 * k0 + k1 * k1;
}

int first_nonnegative(const PhaseGrid& pg) {
  for (int j = 0; j < pg.n_p; ++j)
    if (pg.point(j) >= -1e-12 * pg.spacing()) return j;
  throw UsageError("phase grid has no point at p >= 0");
}

}  // namespace

void PhaseGrid::validate() const {
  if (!std::isfinite(p_min) || !std::isfinite(p_max) || !(p_min < 0.0) || !(p_max > 0.0))
    throw UsageError("phase grid needs p_min < 0 < p_max");
  if (n_p < 4 || (n_p & (n_p - 1)) != 0) throw UsageError("n_p must be a power of two >= 4");
}

void OracleConfig::validate() const {
  if (!std::isfinite(c) || !std::isfinite(beta) || !std::isfinite(nu) || !std::isfinite(t))
    throw UsageError("oracle config has non-finite entries");
  if (!(c > 0.0) || !(nu > 0.0)) throw UsageError("diffusivity and viscosity must be positive");
  if (t < 0.0) throw UsageError("evolution time must be >= 0");
}

PhaseRecovery parse_phase_recovery(std::string_view name) {
  if (name == "delta") return PhaseRecovery::delta;
  if (name == "step") return PhaseRecovery::step;
  throw UsageError("unknown recovery kind '" + std::string(name) + "' (expected delta|step)");
}

Field warp_lift_exp(const Field& u0, const PhaseGrid& pg) {
  require_single_channel(u0);
  pg.validate();
  Field v(u0.grid(), pg.n_p);
  for (std::size_t x = 0; x < u0.points(); ++x)
    for (int j = 0; j < pg.n_p; ++j) v.at(x, j) = std::exp(-std::abs(pg.point(j))) * u0.at(x, 0);
  return v;
}

Field warp_lift_sin(const Field& u0, const PhaseGrid& pg) {
  require_single_channel(u0);
  pg.validate();
  if (std::abs(pg.p_min + std::numbers::pi) > 1e-12 || std::abs(pg.p_max - std::numbers::pi) > 1e-12)
    throw UsageError("sin lift requires p in [-pi, pi]");
  Field v(u0.grid(), pg.n_p);
  for (std::size_t x = 0; x < u0.points(); ++x)
    for (int j = 0; j < pg.n_p; ++j) v.at(x, j) = std::sin(pg.point(j)) * u0.at(x, 0);
  return v;
}

Field evolve_phase_heat(const Field& v0, const PhaseGrid& pg, const OracleConfig& cfg) {
  pg.validate();
  cfg.validate();
  if (v0.aux_len() != pg.n_p) throw UsageError("field aux length does not match n_p");
  const Grid& g = v0.grid();
  Spectrum s = dft_spatial(v0);
  s = dft_axis(s, Axis::aux(g));
  auto vals = s.values_mut();
  const int d = g.dims();
  for (std::size_t pt = 0; pt < g.points(); ++pt) {
    const double xi2 = squared_wavenumber(g, pt);
    for (int j = 0; j < pg.n_p; ++j) {
      const double mu = angular(j, pg.n_p, pg.length());
      vals[pt * pg.n_p + j] *= std::polar(1.0, cfg.t * cfg.c * mu * xi2);
    }
  }
  s = idft_axis(s, Axis::aux(g));
  for (int a = 0; a < d; ++a) s = idft_axis(s, Axis::spatial(a));
  std::vector<double> re(s.values().size());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = s.values()[i].real();
  return Field(g, pg.n_p, std::move(re));
}

Field recover_phase(const Field& v1, const PhaseGrid& pg, PhaseRecovery kind) {
  pg.validate();
  if (v1.aux_len() != pg.n_p) throw UsageError("field aux length does not match n_p");
  const int j0 = first_nonnegative(pg);
  std::vector<double> w(pg.n_p, 0.0);
  if (kind == PhaseRecovery::delta) {
    w[j0] = 1.0;
  } else {
    const int last = pg.n_p - 1;
    double calib = 0.0;
    for (int j = j0; j <= last; ++j) {
      w[j] = (j == j0 || j == last) ? 0.5 * pg.spacing() : pg.spacing();
      calib += w[j] * std::exp(-std::abs(pg.point(j)));
    }
    for (double& x : w) x /= calib;
  }
  Field u(v1.grid(), 1);
  for (std::size_t x = 0; x < v1.points(); ++x) {
    double acc = 0.0;
    for (int j = j0; j < pg.n_p; ++j) acc += w[j] * v1.at(x, j);
    u.at(x, 0) = acc;
  }
  return u;
}

Field heat_exact(const Field& u0, const OracleConfig& cfg) {
  cfg.validate();
  const Grid& g = u0.grid();
  Spectrum s = dft_spatial(u0);
  auto vals = s.values_mut();
  for (std::size_t pt = 0; pt < g.points(); ++pt) {
    const double xi2 = squared_wavenumber(g, pt);
    for (int c = 0; c < u0.aux_len(); ++c) vals[pt * u0.aux_len() + c] *= std::exp(-cfg.c * xi2 * cfg.t);
  }
  return idft_spatial(s);
}

namespace {

double rel_l2_fields(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    num += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
    den += b.values()[i] * b.values()[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

std::string VerifyReport::table() const {
  std::ostringstream os;
  os.precision(6);
  os << "check,recovery,p_max,n_p,t,rel_l2,tolerance,pass\n";
  for (const auto& r : rows)
    os << r.check << "," << r.recovery << "," << r.p_max << "," << r.n_p << "," << r.t << "," << std::scientific
       << r.rel_l2 << "," << r.tolerance << std::defaultfloat << "," << (r.pass ? "true" : "false") << "\n";
  return os.str();
}

VerifyReport oracle_verify(const VerifyOptions& opt) {
  opt.phase.validate();
  opt.oracle.validate();
  const Grid g(opt.resolution);
  Field u0(g, 1);
  for (int i = 0; i < opt.resolution; ++i) {
    const double x = static_cast<double>(i) / opt.resolution;
    u0.at(i, 0) = std::sin(2 * std::numbers::pi * x);
  }
  auto run = [&](const PhaseGrid& pg, double t, PhaseRecovery kind) {
    OracleConfig cfg = opt.oracle;
    cfg.t = t;
    const Field v1 = evolve_phase_heat(warp_lift_exp(u0, pg), pg, cfg);
    return rel_l2_fields(recover_phase(v1, pg, kind), heat_exact(u0, cfg));
  };
  VerifyReport rep;
  auto add = [&](VerifyRow r) {
    rep.pass = rep.pass && r.pass;
    rep.rows.push_back(std::move(r));
  };
  for (PhaseRecovery kind : opt.recoveries) {
    const std::string name = kind == PhaseRecovery::delta ? "delta" : "step";
    const double e = run(opt.phase, opt.oracle.t, kind);
    add({"accuracy", name, opt.phase.p_max, opt.phase.n_p, opt.oracle.t, e, opt.tolerance, e < opt.tolerance});
    double prev = e;
    PhaseGrid pg = opt.phase;
    for (int k = 0; k < opt.doublings; ++k) {
      pg = PhaseGrid{2 * pg.p_min, 2 * pg.p_max, 2 * pg.n_p};
      const double ek = run(pg, opt.oracle.t, kind);
      add({"convergence", name, pg.p_max, pg.n_p, opt.oracle.t, ek, prev, ek < prev});
      prev = ek;
    }
    const double e0 = run(opt.phase, 0.0, kind);
    const double tol0 = kind == PhaseRecovery::delta ? 1e-12 : opt.tolerance;
    add({"t0", name, opt.phase.p_max, opt.phase.n_p, 0.0, e0, tol0, e0 < tol0});
  }
  return rep;
}

}  // namespace skno
