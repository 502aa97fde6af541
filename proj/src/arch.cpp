#include "skno/arch.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>
#include <utility>

#include "skno/error.hpp"

namespace skno {
namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* what) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  std::string options;
  for (const auto& [e, name] : table) options += (options.empty() ? "" : "|") + std::string(name);
  throw UsageError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected " + options + ")");
}

template <class E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [k, name] : table)
    if (k == e) return name;
  return "?";
}

constexpr std::array<std::pair<LiftKind, std::string_view>, 4> kLift{{
    {LiftKind::constant, "constant"},
    {LiftKind::linear, "linear"},
    {LiftKind::mlp, "mlp"},
    {LiftKind::mlp_dropout, "mlp_dropout"},
}};
constexpr std::array<std::pair<RecoverKind, std::string_view>, 6> kRecover{{
    {RecoverKind::delta, "delta"},
    {RecoverKind::step, "step"},
    {RecoverKind::mean, "mean"},
    {RecoverKind::linear, "linear"},
    {RecoverKind::mlp, "mlp"},
    {RecoverKind::mlp_dropout, "mlp_dropout"},
}};
constexpr std::array<std::pair<ATildeForm, std::string_view>, 2> kForm{{
    {ATildeForm::diag, "diag"},
    {ATildeForm::full, "full"},
}};

}  // namespace

std::string_view to_string(LiftKind k) { return name_of(k, kLift); }
std::string_view to_string(RecoverKind k) { return name_of(k, kRecover); }
std::string_view to_string(ATildeForm f) { return name_of(f, kForm); }
LiftKind parse_lift_kind(std::string_view s) { return parse_enum(s, kLift, "lift kind"); }
RecoverKind parse_recover_kind(std::string_view s) { return parse_enum(s, kRecover, "recover kind"); }
ATildeForm parse_a_tilde_form(std::string_view s) { return parse_enum(s, kForm, "a_tilde form"); }

void ArchConfig::validate() const {
  if (d != 1 && d != 2) throw UsageError("d must be 1 or 2");
  if (in_channels < 1 || out_channels < 1) throw UsageError("channel counts must be >= 1");
  if (n_layers < 1) throw UsageError("n_layers must be >= 1");
  if (modes < 1) throw UsageError("modes must be >= 1");
  if (n_p < 1) throw UsageError("n_p must be >= 1");
  if (!with_global_propagators && !with_local_propagator)
    throw UsageError("at least one of the global or local propagators must be enabled");
  if (recover_is_fixed(recover_kind) && out_channels != 1)
    throw UsageError("fixed recovery kinds produce one output channel");
  if ((recover_kind == RecoverKind::delta || recover_kind == RecoverKind::step) && n_p < 2)
    throw UsageError("delta/step recovery needs n_p >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
}

nlohmann::json ArchConfig::to_json() const {
  return {
      {"d", d},
      {"in_channels", in_channels},
      {"out_channels", out_channels},
      {"n_layers", n_layers},
      {"modes", modes},
      {"n_p", n_p},
      {"lift_kind", std::string(to_string(lift_kind))},
      {"recover_kind", std::string(to_string(recover_kind))},
      {"a_tilde_form", std::string(to_string(a_tilde_form))},
      {"with_a_tilde", with_a_tilde},
      {"with_bias_b", with_bias_b},
      {"with_linear_residual", with_linear_residual},
      {"with_nonlinear_residual", with_nonlinear_residual},
      {"with_local_propagator", with_local_propagator},
      {"with_global_propagators", with_global_propagators},
      {"with_positional_features", with_positional_features},
      {"dropout", dropout},
  };
}

ArchConfig ArchConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("arch must be a JSON object");
  ArchConfig a;
  static const std::array<std::string_view, 17> known{
      "d", "in_channels", "out_channels", "n_layers", "modes", "n_p", "lift_kind", "recover_kind",
      "a_tilde_form", "with_a_tilde", "with_bias_b", "with_linear_residual", "with_nonlinear_residual",
      "with_local_propagator", "with_global_propagators", "with_positional_features", "dropout"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError("unknown arch field '" + key + "'");
  try {
    a.d = j.value("d", a.d);
    a.in_channels = j.value("in_channels", a.in_channels);
    a.out_channels = j.value("out_channels", a.out_channels);
    a.n_layers = j.value("n_layers", a.n_layers);
    a.modes = j.value("modes", a.modes);
    a.n_p = j.value("n_p", a.n_p);
    if (j.contains("lift_kind")) a.lift_kind = parse_lift_kind(j["lift_kind"].get<std::string>());
    if (j.contains("recover_kind")) a.recover_kind = parse_recover_kind(j["recover_kind"].get<std::string>());
    if (j.contains("a_tilde_form")) a.a_tilde_form = parse_a_tilde_form(j["a_tilde_form"].get<std::string>());
    a.with_a_tilde = j.value("with_a_tilde", a.with_a_tilde);
    a.with_bias_b = j.value("with_bias_b", a.with_bias_b);
    a.with_linear_residual = j.value("with_linear_residual", a.with_linear_residual);
    a.with_nonlinear_residual = j.value("with_nonlinear_residual", a.with_nonlinear_residual);
    a.with_local_propagator = j.value("with_local_propagator", a.with_local_propagator);
    a.with_global_propagators = j.value("with_global_propagators", a.with_global_propagators);
    a.with_positional_features = j.value("with_positional_features", a.with_positional_features);
    a.dropout = j.value("dropout", a.dropout);
  } catch (const nlohmann::json::type_error& e) {
    throw UsageError(std::string("arch field has the wrong type: ") + e.what());
  }
  a.validate();
  return a;
}

std::string canonical_hash(const nlohmann::json& j) {
  // nlohmann::json objects are std::map-backed, so dump() emits sorted keys
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ArchConfig::hash() const { return canonical_hash(to_json()); }

std::string ArchConfig::summary() const {
  std::ostringstream os;
  os << "d" << d << " L" << n_layers << " k" << modes << " np" << n_p << " lift=" << to_string(lift_kind)
     << " rec=" << to_string(recover_kind) << " A=" << (with_a_tilde ? to_string(a_tilde_form) : "off")
     << " B=" << (with_bias_b ? "on" : "off") << " linres=" << (with_linear_residual ? "on" : "off")
     << " nlres=" << (with_nonlinear_residual ? "on" : "off") << " global=" << (with_global_propagators ? "on" : "off")
     << " local=" << (with_local_propagator ? "on" : "off") << " pos=" << (with_positional_features ? "on" : "off");
  return os.str();
}

}  // namespace skno
