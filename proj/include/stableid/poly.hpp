#pragma once

// Sparse multivariate polynomials with real coefficients.
//
// Monomials are identified by their vector degree (exponent vector). All
// ordered containers use graded lexicographic order: lower total degree
// first, ties broken by comparing exponent vectors left to right, so that
// for two variables the order reads 1, v2, v1, v2^2, v1 v2, v1^2, ...

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stableid {

class VectorDegree {
 public:
  VectorDegree() = default;
  explicit VectorDegree(std::vector<int> exponents);
  VectorDegree(std::initializer_list<int> exponents)
      : VectorDegree(std::vector<int>(exponents)) {}

  static VectorDegree zero(std::size_t var_count);
  static VectorDegree unit(std::size_t var_count, std::size_t coordinate, int power = 1);

  std::size_t size() const noexcept { return exps_.size(); }
  int operator[](std::size_t d) const { return exps_[d]; }
  const std::vector<int>& exponents() const noexcept { return exps_; }
  int total_degree() const noexcept { return total_; }
  bool is_zero() const noexcept { return total_ == 0; }

  VectorDegree operator+(const VectorDegree& other) const;
  VectorDegree scaled(int factor) const;

  /// Places this degree at `offset` inside a degree over `var_count` variables.
  VectorDegree embedded(std::size_t offset, std::size_t var_count) const;
  /// Extracts coordinates [offset, offset + count).
  VectorDegree slice(std::size_t offset, std::size_t count) const;

  friend bool operator==(const VectorDegree& a, const VectorDegree& b) {
    return a.exps_ == b.exps_;
  }
  friend std::strong_ordering operator<=>(const VectorDegree& a, const VectorDegree& b);

  std::string to_string(std::span<const std::string> names = {}) const;

 private:
  std::vector<int> exps_;
  int total_ = 0;
};

/// v^alpha; the empty product is 1.
double monomial_eval(const VectorDegree& alpha, std::span<const double> v);

/// Factor i (0-based) of the multilinear lifting p_alpha reads coordinate
/// beta(i): the smallest d with alpha_0 + ... + alpha_d > i.
std::size_t beta_index(const VectorDegree& alpha, std::size_t i);

class Polynomial {
 public:
  using TermMap = std::map<VectorDegree, double>;

  explicit Polynomial(std::size_t var_count = 1);
  Polynomial(std::size_t var_count, const TermMap& terms);

  static Polynomial constant(std::size_t var_count, double c);
  static Polynomial variable(std::size_t var_count, std::size_t coordinate);
  static Polynomial monomial(const VectorDegree& alpha, double c = 1.0);

  std::size_t var_count() const noexcept { return n_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }
  int degree() const;
  double coefficient(const VectorDegree& alpha) const;
  double max_abs_coefficient() const;

  /// Accumulates c * v^alpha; coefficients that cancel to exactly zero are dropped.
  void add_term(const VectorDegree& alpha, double c);

  double operator()(std::span<const double> v) const;
  double operator()(const Eigen::VectorXd& v) const {
    return (*this)(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(double c);

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator*(Polynomial p, double c) { return p *= c; }
  friend Polynomial operator*(double c, Polynomial p) { return p *= c; }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);

  /// Re-embeds into a larger variable vector: variable d becomes variable offset + d.
  Polynomial embedded(std::size_t offset, std::size_t var_count) const;

  /// Removes terms with |c| <= tol * max|c|.
  Polynomial pruned(double rel_tol) const;

  std::string to_string(std::span<const std::string> names = {}) const;

 private:
  std::size_t n_;
  TermMap terms_;
};

Polynomial pow(const Polynomial& p, int k);

/// Partial derivative with respect to variable `coordinate`.
Polynomial derivative(const Polynomial& p, std::size_t coordinate);

/// Composition p(images[0](u), ..., images[n-1](u)) where every image is an
/// affine polynomial over the target variables u. Throws std::invalid_argument
/// if an image has degree > 1.
Polynomial substitute(const Polynomial& p, std::span<const Polynomial> images);

/// Strictly increasing (graded lexicographic) list of distinct vector degrees.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  /// Sorts and removes duplicates; all degrees must share a size.
  explicit MonomialBasis(std::vector<VectorDegree> degrees);

  std::size_t size() const noexcept { return degrees_.size(); }
  bool empty() const noexcept { return degrees_.empty(); }
  std::size_t var_count() const noexcept { return n_; }
  const VectorDegree& operator[](std::size_t j) const { return degrees_[j]; }
  const std::vector<VectorDegree>& degrees() const noexcept { return degrees_; }
  auto begin() const { return degrees_.begin(); }
  auto end() const { return degrees_.end(); }

  std::optional<std::size_t> index_of(const VectorDegree& alpha) const;
  bool contains(const VectorDegree& alpha) const { return index_of(alpha).has_value(); }
  int max_degree() const;

  /// Column of monomial values m(v).
  Eigen::VectorXd evaluate(std::span<const double> v) const;

  friend bool operator==(const MonomialBasis&, const MonomialBasis&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<VectorDegree> degrees_;
};

/// Every alpha over `var_count` variables with total degree <= max_degree.
MonomialBasis basis_up_to_degree(std::size_t var_count, int max_degree);

MonomialBasis basis_union(const MonomialBasis& a, const MonomialBasis& b);

}  // namespace stableid
