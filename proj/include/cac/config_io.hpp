#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cac/scenario.hpp"

namespace cac {

/// Load and strictly validate a JSON configuration. Unknown keys, missing
/// keys, wrong types and model-invariant violations each raise ConfigError
/// with a distinct kind and code.
[[nodiscard]] Scenario parse_config(const std::filesystem::path& path);
[[nodiscard]] Scenario parse_config_text(std::string_view text);
[[nodiscard]] Scenario parse_config_json(const nlohmann::json& doc);

/// Canonical JSON form (defaults filled in, keys sorted).
[[nodiscard]] nlohmann::json to_json(const Scenario& scenario);

/// SHA-256 of the canonical form; independent of key order and formatting.
[[nodiscard]] std::string config_digest(const Scenario& scenario);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

}  // namespace cac
