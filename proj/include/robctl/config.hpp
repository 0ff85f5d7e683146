#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "robctl/params.hpp"

namespace robctl {

using ModelConfig = std::variant<MertonParamsd, HestonParamsd>;

// Raised for malformed configs; fields carries one "key: problem" entry per issue.
struct ConfigError : std::invalid_argument {
  std::vector<std::string> fields;
  ConfigError(const std::string& what, std::vector<std::string> f)
      : std::invalid_argument(what), fields(std::move(f)) {}
};

// {"model":"merton"|"heston", <every parameter field>}; unknown or missing keys
// and non-finite values are rejected.
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path, std::string* raw = nullptr);

nlohmann::json to_json(const ModelConfig& c);
std::string model_name(const ModelConfig& c);

// Reference parameter sets as config text.
std::string reference_config_text(const std::string& model);

std::string sha256_hex(std::string_view bytes);

// Writes through a sibling temp file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace robctl
