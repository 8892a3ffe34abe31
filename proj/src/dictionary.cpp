#include "stableid/dictionary.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/QR>

#include "json_io.hpp"
#include "stableid/errors.hpp"

namespace stableid {

namespace {

std::vector<Polynomial> normalized(std::vector<Polynomial> comps, std::size_t n_x, std::size_t vars,
                                   const char* what, std::size_t i) {
  if (comps.empty()) return std::vector<Polynomial>(n_x, Polynomial(vars));
  if (comps.size() != n_x)
    throw DimensionError(std::string(what) + "[" + std::to_string(i) + "] has " +
                         std::to_string(comps.size()) + " components, expected n_x = " +
                         std::to_string(n_x));
  for (const auto& p : comps)
    if (p.var_count() != vars)
      throw DimensionError(std::string(what) + "[" + std::to_string(i) + "] reads " +
                           std::to_string(p.var_count()) + " variables, expected " +
                           std::to_string(vars));
  return comps;
}

std::vector<Polynomial> combine(const std::vector<std::vector<Polynomial>>& basis,
                                const Eigen::VectorXd& theta, std::size_t n_x, std::size_t vars) {
  if (static_cast<std::size_t>(theta.size()) != basis.size())
    throw DimensionError("theta has " + std::to_string(theta.size()) + " entries, dictionary has " +
                         std::to_string(basis.size()));
  std::vector<Polynomial> out(n_x, Polynomial(vars));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double t = theta(static_cast<Eigen::Index>(i));
    if (t == 0.0) continue;
    for (std::size_t a = 0; a < n_x; ++a) out[a] += basis[i][a] * t;
  }
  return out;
}

int max_degree(const std::vector<std::vector<Polynomial>>& basis) {
  int d = 0;
  for (const auto& comps : basis)
    for (const auto& p : comps) d = std::max(d, p.degree());
  return d;
}

}  // namespace

Dictionary::Dictionary(std::size_t n_x, std::size_t n_w, std::vector<std::vector<Polynomial>> psi,
                       std::vector<std::vector<Polynomial>> phi, std::vector<std::string> labels)
    : n_x_(n_x), n_w_(n_w) {
  if (n_x == 0) throw DimensionError("dictionary: n_x must be positive");
  if (psi.size() != phi.size())
    throw DimensionError("dictionary: psi has " + std::to_string(psi.size()) + " entries, phi has " +
                         std::to_string(phi.size()));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi_.push_back(normalized(std::move(psi[i]), n_x, n_x, "psi", i));
    phi_.push_back(normalized(std::move(phi[i]), n_x, n_x + n_w, "phi", i));
  }
  labels.resize(psi_.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].empty()) labels[i] = "theta" + std::to_string(i);
  labels_ = std::move(labels);
}

std::vector<Polynomial> Dictionary::e_components(const Eigen::VectorXd& theta) const {
  return combine(psi_, theta, n_x_, n_x_);
}

std::vector<Polynomial> Dictionary::f_components(const Eigen::VectorXd& theta) const {
  return combine(phi_, theta, n_x_, n_x_ + n_w_);
}

int Dictionary::e_degree() const { return max_degree(psi_); }
int Dictionary::f_degree() const { return max_degree(phi_); }

bool operator==(const Dictionary& a, const Dictionary& b) {
  if (a.n_x_ != b.n_x_ || a.n_w_ != b.n_w_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t c = 0; c < a.n_x_; ++c)
      if (a.psi_[i][c].terms() != b.psi_[i][c].terms() || a.phi_[i][c].terms() != b.phi_[i][c].terms())
        return false;
  return true;
}

namespace {

std::vector<std::string> variable_names(std::size_t n_x, std::size_t n_w) {
  std::vector<std::string> names;
  for (std::size_t d = 0; d < n_x; ++d) names.push_back(n_x == 1 ? "x" : "x" + std::to_string(d + 1));
  for (std::size_t d = 0; d < n_w; ++d) names.push_back(n_w == 1 ? "w" : "w" + std::to_string(d + 1));
  return names;
}

// Single-component vector: p in slot a, zero elsewhere.
std::vector<Polynomial> in_slot(const Polynomial& p, std::size_t a, std::size_t n_x) {
  std::vector<Polynomial> out(n_x, Polynomial(p.var_count()));
  out[a] = p;
  return out;
}

std::string slot_label(const std::string& body, std::size_t a, std::size_t n_x) {
  return n_x == 1 ? body : body + "@" + std::to_string(a + 1);
}

}  // namespace

Dictionary linear_dictionary(std::size_t n_x, std::size_t n_w) {
  std::vector<std::vector<Polynomial>> psi, phi;
  std::vector<std::string> labels;
  const auto names = variable_names(n_x, n_w);
  for (std::size_t a = 0; a < n_x; ++a)
    for (std::size_t b = 0; b < n_x; ++b) {
      psi.push_back(in_slot(Polynomial::variable(n_x, b), a, n_x));
      phi.push_back({});
      labels.push_back("e:" + slot_label(names[b], a, n_x));
    }
  for (std::size_t a = 0; a < n_x; ++a)
    for (std::size_t b = 0; b < n_x + n_w; ++b) {
      psi.push_back({});
      phi.push_back(in_slot(Polynomial::variable(n_x + n_w, b), a, n_x));
      labels.push_back("f:" + slot_label(names[b], a, n_x));
    }
  return Dictionary(n_x, n_w, std::move(psi), std::move(phi), std::move(labels));
}

Dictionary monomial_dictionary(std::size_t n_x, std::size_t n_w, int e_degree, int f_state_degree,
                               int f_input_degree) {
  if (e_degree < 1) throw std::invalid_argument("monomial_dictionary: e_degree must be >= 1");
  std::vector<std::vector<Polynomial>> psi, phi;
  std::vector<std::string> labels;
  const auto names = variable_names(n_x, n_w);
  const auto e_basis = basis_up_to_degree(n_x, e_degree);
  const auto xs = basis_up_to_degree(n_x, std::max(f_state_degree, 0));
  std::vector<VectorDegree> f_terms;
  if (n_w == 0) {
    f_terms.assign(xs.begin(), xs.end());
  } else {
    const auto ws = basis_up_to_degree(n_w, std::max(f_input_degree, 0));
    for (const auto& bw : ws)
      for (const auto& bx : xs) {
        std::vector<int> e(bx.exponents());
        e.insert(e.end(), bw.exponents().begin(), bw.exponents().end());
        f_terms.emplace_back(std::move(e));
      }
  }
  const MonomialBasis f_basis(std::move(f_terms));
  for (std::size_t a = 0; a < n_x; ++a)
    for (const auto& beta : e_basis) {
      if (beta.is_zero()) continue;
      psi.push_back(in_slot(Polynomial::monomial(beta), a, n_x));
      phi.push_back({});
      labels.push_back("e:" + slot_label(beta.to_string(names), a, n_x));
    }
  for (std::size_t a = 0; a < n_x; ++a)
    for (const auto& beta : f_basis) {
      psi.push_back({});
      phi.push_back(in_slot(Polynomial::monomial(beta), a, n_x));
      labels.push_back("f:" + slot_label(beta.to_string(names), a, n_x));
    }
  return Dictionary(n_x, n_w, std::move(psi), std::move(phi), std::move(labels));
}

Dictionary benchmark_dictionary() { return monomial_dictionary(1, 1, 5, 3, 1); }

Eigen::VectorXd benchmark_theta() {
  Polynomial e(1);
  e.add_term({1}, 1.0);
  e.add_term({5}, 0.2);
  Polynomial f(2);
  f.add_term({3, 0}, 1.0 / 3.0);
  f.add_term({0, 1}, 5.0);
  return theta_for(benchmark_dictionary(), {e}, {f});
}

Eigen::VectorXd theta_for(const Dictionary& dict, const std::vector<Polynomial>& e,
                          const std::vector<Polynomial>& f) {
  if (e.size() != dict.n_x() || f.size() != dict.n_x())
    throw DimensionError("theta_for: need n_x component polynomials for e and f");
  // Rows: (component, monomial) coefficient slots of e followed by those of f.
  std::vector<std::pair<std::size_t, VectorDegree>> e_rows, f_rows;
  auto collect = [](std::vector<std::pair<std::size_t, VectorDegree>>& rows, std::size_t a,
                    const Polynomial& p) {
    for (const auto& [alpha, c] : p.terms()) rows.emplace_back(a, alpha);
  };
  for (std::size_t a = 0; a < dict.n_x(); ++a) {
    collect(e_rows, a, e[a]);
    collect(f_rows, a, f[a]);
    for (std::size_t i = 0; i < dict.size(); ++i) {
      collect(e_rows, a, dict.psi(i)[a]);
      collect(f_rows, a, dict.phi(i)[a]);
    }
  }
  std::sort(e_rows.begin(), e_rows.end());
  e_rows.erase(std::unique(e_rows.begin(), e_rows.end()), e_rows.end());
  std::sort(f_rows.begin(), f_rows.end());
  f_rows.erase(std::unique(f_rows.begin(), f_rows.end()), f_rows.end());
  const auto m = static_cast<Eigen::Index>(e_rows.size() + f_rows.size());
  const auto n = static_cast<Eigen::Index>(dict.size());
  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  Eigen::Index row = 0;
  for (const auto& [a, alpha] : e_rows) {
    rhs(row) = e[a].coefficient(alpha);
    for (std::size_t i = 0; i < dict.size(); ++i)
      a_mat(row, static_cast<Eigen::Index>(i)) = dict.psi(i)[a].coefficient(alpha);
    ++row;
  }
  for (const auto& [a, alpha] : f_rows) {
    rhs(row) = f[a].coefficient(alpha);
    for (std::size_t i = 0; i < dict.size(); ++i)
      a_mat(row, static_cast<Eigen::Index>(i)) = dict.phi(i)[a].coefficient(alpha);
    ++row;
  }
  Eigen::VectorXd theta = a_mat.completeOrthogonalDecomposition().solve(rhs);
  const double resid = (a_mat * theta - rhs).norm();
  if (!(resid <= 1e-9 * (1.0 + rhs.norm())))
    throw std::invalid_argument("theta_for: (e, f) not representable in dictionary (residual " +
                                std::to_string(resid) + ")");
  return theta;
}

std::string dictionary_to_string(const Dictionary& dict) {
  return detail::dictionary_to_json(dict).dump(1) + "\n";
}

Dictionary parse_dictionary(const std::string& text) {
  return detail::dictionary_from_json(detail::parse_json(text));
}

}  // namespace stableid
