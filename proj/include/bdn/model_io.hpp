#pragma once

// Model files: UTF-8 JSON documents describing the generic network, its
// parameter distributions, assessment questions and display settings.
//
// Distribution literals:
//   {"kind": "point", "value": v}
//   {"kind": "uniform", "a": lo, "b": hi}
//   {"kind": "beta", "alpha": a, "beta": b [, "lo": 0, "hi": 1]}
//   {"kind": "truncated-normal", "mu": m, "sigma": s, "lo": l, "hi": h}
//   {"kind": "histogram", "edges": [...], "masses": [...]}
// each with "role": "probability" | "utility" | "covariate" (inherited from
// the replaced parameter inside refinement maps). Row literals:
//   {"row": "binary", "p": <probability literal>}
//   {"row": "dirichlet", "alpha": [...]}
//   {"row": "point", "probabilities": [...]}
// Tables ("cpt", "table") are arrays indexed row-major over the declared
// parent order.

#include <filesystem>
#include "json.hpp"
#include <string>
#include <string_view>

#include "bdn/network.hpp"

namespace bdn {

inline constexpr int kModelFormatVersion = 1;

/// Parses, schema-checks, rescales utilities to [0, 1] and validates.
/// Throws ParseError, SchemaError or ValidationError.
NetworkModel load_model_text(std::string_view text);
NetworkModel load_model(const std::filesystem::path& path);

/// Canonical JSON for a model (sorted keys; utilities already normalized).
nlohmann::json emit_model(const NetworkModel& model);
std::string emit_model_text(const NetworkModel& model);

/// FNV-1a 64-bit digest of the canonical text, as 16 hex digits.
std::string content_hash(const NetworkModel& model);
std::string fnv1a_hex(std::string_view bytes);

nlohmann::json parameter_to_json(const Parameter& p);
/// `inherited_role` applies when a scalar literal omits "role".
Parameter parameter_from_json(const nlohmann::json& j, const std::string& path,
                              std::optional<Role> inherited_role = std::nullopt);

}  // namespace bdn
