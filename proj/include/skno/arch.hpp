#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace skno {

enum class LiftKind { constant, linear, mlp, mlp_dropout };
enum class RecoverKind { delta, step, mean, linear, mlp, mlp_dropout };
enum class ATildeForm { diag, full };

std::string_view to_string(LiftKind k);
std::string_view to_string(RecoverKind k);
std::string_view to_string(ATildeForm f);
LiftKind parse_lift_kind(std::string_view s);
RecoverKind parse_recover_kind(std::string_view s);
ATildeForm parse_a_tilde_form(std::string_view s);

inline bool recover_is_fixed(RecoverKind k) {
  return k == RecoverKind::delta || k == RecoverKind::step || k == RecoverKind::mean;
}

struct ArchConfig {
  int d = 1;
  int in_channels = 1;   // d_a, before positional features
  int out_channels = 1;  // d_u
  int n_layers = 1;
  int modes = 1;         // retained |frequency| <= modes per spatial axis
  int n_p = 4;
  LiftKind lift_kind = LiftKind::linear;
  RecoverKind recover_kind = RecoverKind::linear;
  ATildeForm a_tilde_form = ATildeForm::diag;
  bool with_a_tilde = true;
  bool with_bias_b = true;
  bool with_linear_residual = true;
  bool with_nonlinear_residual = true;
  bool with_local_propagator = true;
  bool with_global_propagators = true;
  bool with_positional_features = false;
  double dropout = 0.1;

  void validate() const;
  int lifted_channels() const { return in_channels + (with_positional_features ? d : 0); }
  /// Layers before the local one; all layers when the local propagator is off.
  int global_layers() const { return with_local_propagator ? n_layers - 1 : n_layers; }
  bool is_local_layer(int l) const { return with_local_propagator && l == n_layers - 1; }

  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);
  /// FNV-1a 64 over the canonical JSON text, as 16 hex digits.
  std::string hash() const;
  std::string summary() const;
};

/// FNV-1a 64-bit hash of canonical (sorted-key, compact) JSON text.
std::string canonical_hash(const nlohmann::json& j);

}  // namespace skno
