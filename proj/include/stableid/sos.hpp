#pragma once

// Sum-of-squares compilation of the model sets into conic programs.
//
// Variables: v = [xi; x; w; Delta; q] (sizes n_x, n_x, n_w, n_x, n_x) for the
// model set Theta and [x; Delta] for the monotonicity set Omega. The regressor
// vector z = [xi; x; w] occupies the leading coordinates of v.
//
// Every identity  lhs(v) = Pi(v)' Sigma Pi(v)  becomes one linear equality per
// monomial; lhs is affine in the decision variables (theta, R, P).

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableid/conic.hpp"
#include "stableid/dictionary.hpp"
#include "stableid/poly.hpp"

namespace stableid {

struct VarRef {
  std::size_t block = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  friend auto operator<=>(const VarRef&, const VarRef&) = default;
};

/// constant + sum coef * variable.
struct AffineExpr {
  double constant = 0.0;
  std::map<VarRef, double> coefs;

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator*=(double c);
  bool is_zero() const;
  double evaluate(const std::vector<Eigen::MatrixXd>& values) const;
};

/// Polynomial whose coefficients are affine expressions in program variables.
class AffinePoly {
 public:
  explicit AffinePoly(std::size_t var_count = 1) : n_(var_count) {}

  std::size_t var_count() const noexcept { return n_; }
  const std::map<VectorDegree, AffineExpr>& terms() const noexcept { return terms_; }

  /// Adds coef * p(v) * variable.
  void add(const Polynomial& p, const VarRef& var, double coef = 1.0);
  /// Adds p(v) as a constant part.
  void add(const Polynomial& p);
  AffinePoly& operator+=(const AffinePoly& other);

  /// Monomials with a nonzero constant or variable coefficient.
  std::vector<VectorDegree> support() const;
  int degree() const;

  /// Substitutes block values; the result is an ordinary polynomial.
  Polynomial evaluate(const std::vector<Eigen::MatrixXd>& values) const;

 private:
  std::size_t n_;
  std::map<VectorDegree, AffineExpr> terms_;
};

/// lhs(v) = gram_basis(v)' Sigma gram_basis(v), Sigma = program block `gram_var`.
struct SosIdentity {
  std::string name;
  AffinePoly lhs;
  MonomialBasis gram_basis;
  std::string gram_var;
  std::vector<std::string> var_names;  ///< for labels and error messages
};

/// True when `target` lies in the convex hull of `points` (exact phase-one simplex, Bland's rule).
bool in_convex_hull(const std::vector<VectorDegree>& points, const VectorDegree& target);

/// Keeps candidates m with 2m in the Newton polytope of `support`, then
/// repeatedly drops m when 2m is neither in `support` nor a sum of two
/// distinct remaining candidates (its diagonal Gram entry would be forced to 0).
MonomialBasis prune_gram_basis(const MonomialBasis& candidates, const std::vector<VectorDegree>& support);

/// Emits the coefficient-matching equalities of `id` into cp; the Gram block
/// must already be declared with size id.gram_basis.size(). Each row is
/// divided by its largest |coefficient|. An lhs monomial no pair of Gram
/// basis elements produces yields a row forcing its coefficient to zero;
/// GramSpanError names the first such monomial whose coefficient is a
/// nonzero constant.
void emit_identity(ConicProgram& cp, const SosIdentity& id);

/// Expanded residual lhs - Pi' Sigma Pi at the given values.
Polynomial identity_residual(const ConicProgram& cp, const SosIdentity& id, const std::vector<Eigen::MatrixXd>& values);

// ---------------------------------------------------------------- model set Theta

struct ThetaOptions {
  double delta = 0.01;
  std::optional<double> eps;   ///< defaults to delta
  bool surrogate_psd = true;   ///< declare R PSD instead of merely symmetric
};

struct ThetaProgram {
  ConicProgram cp;
  std::size_t theta = 0, R = 0, P = 0, sigma1 = 0, sigma2 = 0;
  MonomialBasis aleph;              ///< indexes R (degrees over z)
  std::vector<SosIdentity> identities;  ///< dissipation and monotonicity identities, pruned
};

/// Left-hand sides of the dissipation identity (index 0) and the monotonicity
/// identity (index 1) over v, with theta, R and P as block variables
/// 0, 1, 2 (R entry (a, b) multiplies z^(alpha_a + alpha_b)).
std::vector<AffinePoly> theta_identity_lhs(const Dictionary& dict, const Eigen::MatrixXd& C, double eps,
                                           const MonomialBasis& aleph, std::size_t theta_block = 0,
                                           std::size_t r_block = 1, std::size_t p_block = 2);

/// Monomials in v of degree <= ceil(d/2), d the top degree of both
/// identities, restricted to the half Newton polytope of their joint support;
/// the constant and every linear monomial are always kept.
MonomialBasis default_pi(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& aleph);

/// Same with an explicit degree bound instead of ceil(d/2).
MonomialBasis pi_of_degree(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& aleph,
                           int degree);

ThetaProgram build_theta_constraints(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& pi,
                                     const MonomialBasis& aleph, const ThetaOptions& opts = {});

// ---------------------------------------------------------------- model set Omega

struct OmegaProgram {
  ConicProgram cp;
  std::size_t theta = 0, sigma = 0;
  SosIdentity identity;
};

/// 2 Delta'(e(x + Delta) - e(x)) - delta |Delta|^2 over [x; Delta], theta as block 0.
AffinePoly omega_identity_lhs(const Dictionary& dict, double delta, std::size_t theta_block = 0);

/// Monomials in [x; Delta] of degree <= ceil(d/2) pruned to the half Newton polytope.
MonomialBasis default_lambda(const Dictionary& dict, double delta);

OmegaProgram build_omega_constraints(const Dictionary& dict, double delta, const MonomialBasis& lambda);

// ---------------------------------------------------------------- objectives and extras

/// Equalities theta = value.
void fix_theta(ConicProgram& cp, std::size_t theta_block, const Eigen::VectorXd& theta);

/// trace(R M) over a symmetric block R; adds the Frobenius ball |R|_F^2 <= kappa when kappa is finite.
void objective_A(ConicProgram& cp, std::size_t r_block, const Eigen::MatrixXd& M, double kappa);

/// Smallest degree set over z spanning every component of e_theta(xi) - f_theta(x, w).
MonomialBasis mls_aleph(const Dictionary& dict);

/// Gamma_i with [e_theta(xi) - f_theta(x, w)]_i = sum_j z^(alpha_j) [Gamma_i theta]_j.
std::vector<Eigen::MatrixXd> mls_gamma(const Dictionary& dict, const MonomialBasis& aleph);

/// Q = sum_i Gamma_i' M Gamma_i.
Eigen::MatrixXd mls_q(const Dictionary& dict, const MonomialBasis& aleph, const Eigen::MatrixXd& M);

/// Minimizes theta' Q theta through the epigraph |L theta|^2 <= t (rotated cone,
/// Q = L'L after clamping negative eigenvalues); adds |theta|^2 <= kappa when finite.
/// Declares blocks "t" and "epigraph".
void objective_quadratic(ConicProgram& cp, std::size_t theta_block, const Eigen::MatrixXd& Q, double kappa);

}  // namespace stableid
