#pragma once

#include "unilearn/core_nn.hpp"

#include <json.hpp>

#include <filesystem>

namespace unilearn {

// Network file format:
//   {"arch": [N0, ..., NL],
//    "weights": [[W^1 flattened row-major], ..., [W^L ...]],
//    "biases":  [[b^1], ..., [b^L]]}
// Row-major means W^i(r, c) sits at index r * N_{i-1} + c. Extra top-level
// keys are preserved by callers and ignored by the reader.
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

/// Exponents serialize as numbers, with infinity as the string "inf".
nlohmann::json exponent_to_json(Exponent e);
Exponent exponent_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

} // namespace unilearn
