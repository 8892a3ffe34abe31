#pragma once

// JSON encodings shared by the file formats (not part of the public API).

#include <json.hpp>

#include "stableid/dictionary.hpp"
#include "stableid/poly.hpp"

namespace stableid::detail {

nlohmann::json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j);

nlohmann::json dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

/// Rethrows nlohmann parse errors as ParseError with line and column.
nlohmann::json parse_json(const std::string& text);

}  // namespace stableid::detail
