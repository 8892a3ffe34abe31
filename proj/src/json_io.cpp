#include "json_io.hpp"

#include <string>

#include "stableid/errors.hpp"

namespace stableid::detail {

using json = nlohmann::json;

json polynomial_to_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& [alpha, c] : p.terms()) terms.push_back({{"c", c}, {"exp", alpha.exponents()}});
  return {{"vars", p.var_count()}, {"terms", std::move(terms)}};
}

Polynomial polynomial_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vars") || !j.contains("terms"))
    throw ParseError("polynomial must be an object with 'vars' and 'terms'");
  const auto n = j["vars"].get<std::size_t>();
  Polynomial p(n);
  for (const auto& t : j["terms"]) {
    auto e = t.at("exp").get<std::vector<int>>();
    if (e.size() != n) throw DimensionError("polynomial term exponent has wrong length");
    p.add_term(VectorDegree(std::move(e)), t.at("c").get<double>());
  }
  return p;
}

namespace {

json components_to_json(const std::vector<Polynomial>& comps) {
  json out = json::array();
  for (const auto& p : comps) out.push_back(polynomial_to_json(p));
  return out;
}

std::vector<Polynomial> components_from_json(const json& j) {
  std::vector<Polynomial> out;
  for (const auto& p : j) out.push_back(polynomial_from_json(p));
  return out;
}

}  // namespace

json dictionary_to_json(const Dictionary& dict) {
  json entries = json::array();
  for (std::size_t i = 0; i < dict.size(); ++i) {
    entries.push_back({{"label", dict.label(i)},
                       {"psi", components_to_json(dict.psi(i))},
                       {"phi", components_to_json(dict.phi(i))}});
  }
  return {{"n_x", dict.n_x()}, {"n_w", dict.n_w()}, {"entries", std::move(entries)}};
}

Dictionary dictionary_from_json(const json& j) {
  try {
    const auto nx = j.at("n_x").get<std::size_t>();
    const auto nw = j.at("n_w").get<std::size_t>();
    std::vector<std::vector<Polynomial>> psi, phi;
    std::vector<std::string> labels;
    for (const auto& e : j.at("entries")) {
      labels.push_back(e.value("label", std::string{}));
      psi.push_back(components_from_json(e.at("psi")));
      phi.push_back(components_from_json(e.at("phi")));
    }
    return Dictionary(nx, nw, std::move(psi), std::move(phi), std::move(labels));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed dictionary: ") + e.what());
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DimensionError("matrix rows differ in length");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = e.byte == 0 ? 0 : e.byte - 1;
    for (std::size_t k = 0; k < stop && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(e.what(), line, col);
  }
}

}  // namespace stableid::detail
