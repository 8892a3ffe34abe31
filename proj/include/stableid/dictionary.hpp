#pragma once

// Model dictionaries: e_theta(x) = sum_i theta_i psi_i(x) and
// f_theta(x, w) = sum_i theta_i phi_i(x, w). Each psi_i / phi_i is a vector
// of n_x polynomials; psi_i reads n_x variables, phi_i reads [x; w].

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableid/poly.hpp"

namespace stableid {

class Dictionary {
 public:
  Dictionary() = default;
  /// psi[i] and phi[i] hold n_x component polynomials each; a component
  /// list may be left empty to mean "identically zero".
  Dictionary(std::size_t n_x, std::size_t n_w, std::vector<std::vector<Polynomial>> psi,
             std::vector<std::vector<Polynomial>> phi, std::vector<std::string> labels = {});

  std::size_t n_x() const noexcept { return n_x_; }
  std::size_t n_w() const noexcept { return n_w_; }
  std::size_t size() const noexcept { return psi_.size(); }

  const std::vector<Polynomial>& psi(std::size_t i) const { return psi_.at(i); }
  const std::vector<Polynomial>& phi(std::size_t i) const { return phi_.at(i); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  /// Component polynomials of e_theta over x.
  std::vector<Polynomial> e_components(const Eigen::VectorXd& theta) const;
  /// Component polynomials of f_theta over [x; w].
  std::vector<Polynomial> f_components(const Eigen::VectorXd& theta) const;

  int e_degree() const;
  int f_degree() const;

  friend bool operator==(const Dictionary& a, const Dictionary& b);

 private:
  std::size_t n_x_ = 0;
  std::size_t n_w_ = 0;
  std::vector<std::vector<Polynomial>> psi_;
  std::vector<std::vector<Polynomial>> phi_;
  std::vector<std::string> labels_;
};

/// e and f linear: psi spans {x_b e_a}, phi spans {x_b e_a} and {w_c e_a}.
Dictionary linear_dictionary(std::size_t n_x, std::size_t n_w);

/// psi spans x^beta e_a with 1 <= |beta| <= e_degree; phi spans
/// x^beta w^gamma e_a with |beta| <= f_state_degree, |gamma| <= f_input_degree.
Dictionary monomial_dictionary(std::size_t n_x, std::size_t n_w, int e_degree, int f_state_degree,
                               int f_input_degree);

/// Scalar benchmark dictionary: e over {x, ..., x^5}, f over x^k w^l with k <= 3, l <= 1.
Dictionary benchmark_dictionary();

/// Parameter vector that realizes the benchmark system
/// x + x^5/5 = x_prev^3/3 + 5 w in benchmark_dictionary().
Eigen::VectorXd benchmark_theta();

/// Inverse of theta -> (e, f): least-squares fit of the given component
/// polynomials by dictionary coefficients. Throws std::invalid_argument when
/// the residual exceeds 1e-9 (target not representable).
Eigen::VectorXd theta_for(const Dictionary& dict, const std::vector<Polynomial>& e,
                          const std::vector<Polynomial>& f);

std::string dictionary_to_string(const Dictionary& dict);
Dictionary parse_dictionary(const std::string& text);

}  // namespace stableid
