#pragma once

// Single-block entry points over Fields, sharing kernels with the batched engine.

#include <span>
#include <vector>

#include "skno/model.hpp"

namespace skno {

/// v0 = P[a], aux = n_p.
Field lift(const SknoModel& m, const Field& a, bool training = false, Rng* dropout_rng = nullptr);

/// F_p^-1 (A o F_p z) for one retained mode: elementwise (diag) or matrix-vector (full).
std::vector<cdouble> p_mix(std::span<const cdouble> z, ATildeForm form, std::span<const double> a_re,
                           std::span<const double> a_im);

/// Kernel path K_l[v] of layer l: spectral + B path for global layers, stencil + mix for the local one.
Field layer_kernel(const SknoModel& m, int layer, const Field& v);

/// Full layer: sigma(K_l[v] + v + w_res(v)) with the configured residual switches.
Field layer_forward(const SknoModel& m, int layer, const Field& v);

/// u = Q[v_L].
Field recover_q(const SknoModel& m, const Field& v, bool training = false, Rng* dropout_rng = nullptr);

}  // namespace skno
