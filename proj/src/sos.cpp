#include "stableid/sos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "stableid/errors.hpp"

namespace stableid {

namespace {

Polynomial var(std::size_t n, std::size_t k) { return Polynomial::variable(n, k); }

std::vector<std::string> indexed(const std::string& base, std::size_t count) {
  if (count == 1) return {base};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(base + std::to_string(k + 1));
  return out;
}

std::vector<std::string> v_names(std::size_t nx, std::size_t nw) {
  std::vector<std::string> out;
  for (const char* base : {"xi", "x", "w", "d", "q"}) {
    const auto part = indexed(base, std::string(base) == "w" ? nw : nx);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<std::string> omega_names(std::size_t nx) {
  auto out = indexed("x", nx);
  const auto d = indexed("d", nx);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

// Component a of a polynomial vector, or the zero polynomial when the list is empty.
Polynomial component(const std::vector<Polynomial>& ps, std::size_t a, std::size_t vars) {
  return ps.empty() ? Polynomial(vars) : ps[a];
}

// 2 Delta'(e_i(x + Delta) - e_i(x)) for dictionary element i, over variables
// with x at x_off and Delta at d_off.
Polynomial monotone_part(const Dictionary& dict, std::size_t i, std::size_t n, std::size_t x_off,
                         std::size_t d_off) {
  const std::size_t nx = dict.n_x();
  std::vector<Polynomial> shifted, plain;
  for (std::size_t b = 0; b < nx; ++b) {
    shifted.push_back(var(n, x_off + b) + var(n, d_off + b));
    plain.push_back(var(n, x_off + b));
  }
  Polynomial out(n);
  for (std::size_t a = 0; a < nx; ++a) {
    const Polynomial psi = component(dict.psi(i), a, nx);
    out += 2.0 * var(n, d_off + a) * (substitute(psi, shifted) - substitute(psi, plain));
  }
  return out;
}

int half_up(int d) { return (d + 1) / 2; }

}  // namespace

// ---------------------------------------------------------------- affine algebra

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  constant += other.constant;
  for (const auto& [v, c] : other.coefs) coefs[v] += c;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double c) {
  constant *= c;
  for (auto& [v, k] : coefs) k *= c;
  return *this;
}

bool AffineExpr::is_zero() const {
  if (constant != 0.0) return false;
  return std::all_of(coefs.begin(), coefs.end(), [](const auto& kv) { return kv.second == 0.0; });
}

double AffineExpr::evaluate(const std::vector<Eigen::MatrixXd>& values) const {
  double s = constant;
  for (const auto& [v, c] : coefs)
    s += c * values.at(v.block)(static_cast<Eigen::Index>(v.i), static_cast<Eigen::Index>(v.j));
  return s;
}

void AffinePoly::add(const Polynomial& p, const VarRef& v, double coef) {
  if (p.var_count() != n_) throw DimensionError("AffinePoly: variable count mismatch");
  for (const auto& [alpha, c] : p.terms()) terms_[alpha].coefs[v] += coef * c;
}

void AffinePoly::add(const Polynomial& p) {
  if (p.var_count() != n_) throw DimensionError("AffinePoly: variable count mismatch");
  for (const auto& [alpha, c] : p.terms()) terms_[alpha].constant += c;
}

AffinePoly& AffinePoly::operator+=(const AffinePoly& other) {
  if (other.n_ != n_) throw DimensionError("AffinePoly: variable count mismatch");
  for (const auto& [alpha, e] : other.terms_) terms_[alpha] += e;
  return *this;
}

std::vector<VectorDegree> AffinePoly::support() const {
  std::vector<VectorDegree> out;
  for (const auto& [alpha, e] : terms_)
    if (!e.is_zero()) out.push_back(alpha);
  return out;
}

int AffinePoly::degree() const {
  int d = 0;
  for (const auto& alpha : support()) d = std::max(d, alpha.total_degree());
  return d;
}

Polynomial AffinePoly::evaluate(const std::vector<Eigen::MatrixXd>& values) const {
  Polynomial out(n_);
  for (const auto& [alpha, e] : terms_) out.add_term(alpha, e.evaluate(values));
  return out;
}

// ---------------------------------------------------------------- identities

void emit_identity(ConicProgram& cp, const SosIdentity& id) {
  const std::size_t g = cp.block_index(id.gram_var);
  const std::size_t n = id.gram_basis.size();
  if (cp.block(g).dim != n) throw DimensionError("identity '" + id.name + "': Gram block has wrong size");

  std::map<VectorDegree, std::vector<Term>> gram;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k; l < n; ++l)
      gram[id.gram_basis[k] + id.gram_basis[l]].push_back(Term{g, k, l, k == l ? 1.0 : 2.0});

  // A monomial no Gram product reaches forces its lhs coefficient to zero;
  // that is only impossible when the coefficient involves no decision variable.
  const auto& lhs = id.lhs.terms();
  for (const auto& [alpha, e] : lhs) {
    if (gram.count(alpha) || e.constant == 0.0) continue;
    const bool fixed = std::all_of(e.coefs.begin(), e.coefs.end(), [](const auto& kv) { return kv.second == 0.0; });
    if (fixed) throw GramSpanError(id.name, alpha.to_string(id.var_names));
  }

  std::set<VectorDegree> monomials;
  for (const auto& [alpha, e] : lhs)
    if (!e.is_zero()) monomials.insert(alpha);
  for (const auto& [alpha, terms] : gram) monomials.insert(alpha);

  for (const auto& alpha : monomials) {
    LinearRow row;
    row.label = id.name + " " + alpha.to_string(id.var_names);
    if (auto it = lhs.find(alpha); it != lhs.end()) {
      row.rhs = -it->second.constant;
      for (const auto& [v, c] : it->second.coefs)
        if (c != 0.0) row.terms.push_back(Term{v.block, v.i, v.j, c});
    }
    if (auto it = gram.find(alpha); it != gram.end())
      for (Term t : it->second) {
        t.coef = -t.coef;
        row.terms.push_back(t);
      }
    double scale = 0.0;
    for (const Term& t : row.terms) scale = std::max(scale, std::abs(t.coef));
    if (scale > 0.0) {
      for (Term& t : row.terms) t.coef /= scale;
      row.rhs /= scale;
    }
    cp.add_row(std::move(row));
  }
}

Polynomial identity_residual(const ConicProgram& cp, const SosIdentity& id,
                             const std::vector<Eigen::MatrixXd>& values) {
  Polynomial out = id.lhs.evaluate(values);
  const Eigen::MatrixXd& sigma = values.at(cp.block_index(id.gram_var));
  for (std::size_t k = 0; k < id.gram_basis.size(); ++k)
    for (std::size_t l = 0; l < id.gram_basis.size(); ++l)
      out.add_term(id.gram_basis[k] + id.gram_basis[l],
                   -sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
  return out;
}

// ---------------------------------------------------------------- Theta

std::vector<AffinePoly> theta_identity_lhs(const Dictionary& dict, const Eigen::MatrixXd& C, double eps,
                                           const MonomialBasis& aleph, std::size_t theta_block,
                                           std::size_t r_block, std::size_t p_block) {
  const std::size_t nx = dict.n_x(), nw = dict.n_w();
  const std::size_t n = 4 * nx + nw, nz = 2 * nx + nw;
  const std::size_t xi = 0, x = nx, w = 2 * nx, d = 2 * nx + nw, q = 3 * nx + nw;
  if (static_cast<std::size_t>(C.cols()) != nx) throw DimensionError("C must have n_x columns");
  if (!aleph.empty() && aleph.var_count() != nz) throw DimensionError("degree set must be over z = [xi; x; w]");

  std::vector<Polynomial> at_xi, at_shift, at_plain;
  for (std::size_t b = 0; b < nx; ++b) at_xi.push_back(var(n, xi + b));
  for (std::size_t b = 0; b < nx; ++b) {
    at_shift.push_back(var(n, x + b) + var(n, d + b));
    at_plain.push_back(var(n, x + b));
  }
  for (std::size_t c = 0; c < nw; ++c) {
    at_shift.push_back(var(n, w + c));
    at_plain.push_back(var(n, w + c));
  }

  AffinePoly diss(n), mono(n);
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const Polynomial e_part = monotone_part(dict, i, n, x, d);
    Polynomial q_diss(n), q_mono(n);
    for (std::size_t a = 0; a < nx; ++a) {
      const Polynomial psi = component(dict.psi(i), a, nx);
      const Polynomial phi = component(dict.phi(i), a, nx + nw);
      const Polynomial f_shift = substitute(phi, at_shift);
      q_diss += -2.0 * var(n, q + a) * (f_shift - substitute(psi, at_xi));
      q_mono += -2.0 * var(n, q + a) * (f_shift - substitute(phi, at_plain));
    }
    diss.add(e_part + q_diss, VarRef{theta_block, i, 0});
    mono.add(e_part + q_mono, VarRef{theta_block, i, 0});
  }
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = a; b < nx; ++b) {
      const double wgt = a == b ? 1.0 : 2.0;
      const Polynomial form = wgt * (var(n, q + a) * var(n, q + b) - var(n, d + a) * var(n, d + b));
      diss.add(form, VarRef{p_block, a, b});
      mono.add(form, VarRef{p_block, a, b});
    }
  const Eigen::MatrixXd ctc = C.transpose() * C;
  Polynomial quad(n), eps_part(n);
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t b = 0; b < nx; ++b)
      quad += -ctc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * var(n, d + a) * var(n, d + b);
    eps_part += -eps * var(n, d + a) * var(n, d + a);
  }
  diss.add(quad);
  mono.add(eps_part);
  for (std::size_t a = 0; a < aleph.size(); ++a)
    for (std::size_t b = a; b < aleph.size(); ++b)
      diss.add(Polynomial::monomial((aleph[a] + aleph[b]).embedded(0, n)), VarRef{r_block, a, b}, a == b ? 1.0 : 2.0);
  return {diss, mono};
}

MonomialBasis pi_of_degree(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& aleph,
                           int degree) {
  const auto lhs = theta_identity_lhs(dict, C, 1.0, aleph);
  std::vector<VectorDegree> support = lhs[0].support();
  for (const auto& alpha : lhs[1].support()) support.push_back(alpha);
  const std::size_t n = lhs[0].var_count();
  MonomialBasis pruned = prune_gram_basis(basis_up_to_degree(n, degree), support);
  return basis_union(pruned, basis_up_to_degree(n, 1));
}

MonomialBasis default_pi(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& aleph) {
  const auto lhs = theta_identity_lhs(dict, C, 1.0, aleph);
  return pi_of_degree(dict, C, aleph, half_up(std::max(lhs[0].degree(), lhs[1].degree())));
}

ThetaProgram build_theta_constraints(const Dictionary& dict, const Eigen::MatrixXd& C, const MonomialBasis& pi,
                                     const MonomialBasis& aleph, const ThetaOptions& opts) {
  if (!(opts.delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const double eps = opts.eps.value_or(opts.delta);
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (aleph.empty()) throw std::invalid_argument("degree set must not be empty");
  const std::size_t nx = dict.n_x(), nw = dict.n_w();
  if (pi.var_count() != 4 * nx + nw) throw DimensionError("Gram basis must be over v = [xi; x; w; Delta; q]");

  ThetaProgram tp;
  tp.aleph = aleph;
  auto lhs = theta_identity_lhs(dict, C, eps, aleph, 0, 1, 2);
  const char* names[2] = {"dissipation", "monotonicity"};
  const char* gram_vars[2] = {"Sigma1", "Sigma2"};
  for (int k = 0; k < 2; ++k) {
    SosIdentity id{names[k], lhs[static_cast<std::size_t>(k)], MonomialBasis(), gram_vars[k], v_names(nx, nw)};
    id.gram_basis = prune_gram_basis(pi, id.lhs.support());
    if (id.gram_basis.empty()) {
      const auto supp = id.lhs.support();
      if (!supp.empty()) throw GramSpanError(id.name, supp.front().to_string(id.var_names));
      id.gram_basis = MonomialBasis({VectorDegree::zero(pi.var_count())});
    }
    tp.identities.push_back(std::move(id));
  }

  ConicProgram& cp = tp.cp;
  tp.theta = cp.add_block("theta", BlockKind::Free, dict.size());
  tp.R = cp.add_block("R", opts.surrogate_psd ? BlockKind::Psd : BlockKind::Symmetric, aleph.size());
  tp.P = cp.add_block("P", BlockKind::Psd, nx, opts.delta);
  tp.sigma1 = cp.add_block("Sigma1", BlockKind::Psd, tp.identities[0].gram_basis.size());
  tp.sigma2 = cp.add_block("Sigma2", BlockKind::Psd, tp.identities[1].gram_basis.size());
  for (const auto& id : tp.identities) emit_identity(cp, id);

  cp.metadata["delta"] = std::to_string(opts.delta);
  cp.metadata["eps"] = std::to_string(eps);
  for (std::size_t i = 0; i < dict.size(); ++i) cp.metadata["theta." + std::to_string(i)] = dict.label(i);
  return tp;
}

// ---------------------------------------------------------------- Omega

AffinePoly omega_identity_lhs(const Dictionary& dict, double delta, std::size_t theta_block) {
  const std::size_t nx = dict.n_x(), n = 2 * nx;
  AffinePoly lhs(n);
  for (std::size_t i = 0; i < dict.size(); ++i) lhs.add(monotone_part(dict, i, n, 0, nx), VarRef{theta_block, i, 0});
  Polynomial quad(n);
  for (std::size_t a = 0; a < nx; ++a) quad += -delta * var(n, nx + a) * var(n, nx + a);
  lhs.add(quad);
  return lhs;
}

MonomialBasis default_lambda(const Dictionary& dict, double delta) {
  const AffinePoly lhs = omega_identity_lhs(dict, delta);
  return prune_gram_basis(basis_up_to_degree(lhs.var_count(), half_up(lhs.degree())), lhs.support());
}

OmegaProgram build_omega_constraints(const Dictionary& dict, double delta, const MonomialBasis& lambda) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const std::size_t nx = dict.n_x();
  if (lambda.var_count() != 2 * nx) throw DimensionError("Gram basis must be over [x; Delta]");
  OmegaProgram op;
  op.identity = SosIdentity{"omega", omega_identity_lhs(dict, delta, 0), lambda, "Sigma", omega_names(nx)};
  op.theta = op.cp.add_block("theta", BlockKind::Free, dict.size());
  op.sigma = op.cp.add_block("Sigma", BlockKind::Psd, lambda.size());
  emit_identity(op.cp, op.identity);
  op.cp.metadata["delta"] = std::to_string(delta);
  for (std::size_t i = 0; i < dict.size(); ++i) op.cp.metadata["theta." + std::to_string(i)] = dict.label(i);
  return op;
}

// ---------------------------------------------------------------- objectives

void fix_theta(ConicProgram& cp, std::size_t theta_block, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != cp.block(theta_block).dim)
    throw DimensionError("fixed parameter vector has wrong length");
  for (std::size_t i = 0; i < cp.block(theta_block).dim; ++i)
    cp.add_row({{Term{theta_block, i, 0, 1.0}}, theta(static_cast<Eigen::Index>(i)), "fixed theta." + std::to_string(i)});
}

void objective_A(ConicProgram& cp, std::size_t r_block, const Eigen::MatrixXd& M, double kappa) {
  const auto n = static_cast<Eigen::Index>(cp.block(r_block).dim);
  if (M.rows() != n || M.cols() != n) throw DimensionError("moment matrix does not match the surrogate block");
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a <= b; ++a)
      cp.add_objective(Term{r_block, static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                            a == b ? M(a, a) : M(a, b) + M(b, a)});
  if (std::isfinite(kappa)) cp.set_norm_ball(NormBall{r_block, kappa});
}

namespace {

// Component a of psi_k(xi) - phi_k(x, w) as a polynomial over z.
Polynomial residual_component(const Dictionary& dict, std::size_t k, std::size_t a) {
  const std::size_t nx = dict.n_x(), nz = 2 * nx + dict.n_w();
  return component(dict.psi(k), a, nx).embedded(0, nz) - component(dict.phi(k), a, nx + dict.n_w()).embedded(nx, nz);
}

}  // namespace

MonomialBasis mls_aleph(const Dictionary& dict) {
  std::vector<VectorDegree> degrees;
  for (std::size_t k = 0; k < dict.size(); ++k)
    for (std::size_t a = 0; a < dict.n_x(); ++a) {
      const Polynomial res = residual_component(dict, k, a);
      for (const auto& [alpha, c] : res.terms()) degrees.push_back(alpha);
    }
  if (degrees.empty()) throw std::invalid_argument("dictionary is identically zero");
  return MonomialBasis(degrees);
}

std::vector<Eigen::MatrixXd> mls_gamma(const Dictionary& dict, const MonomialBasis& aleph) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t a = 0; a < dict.n_x(); ++a) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(aleph.size()), static_cast<Eigen::Index>(dict.size()));
    for (std::size_t k = 0; k < dict.size(); ++k) {
      const Polynomial res = residual_component(dict, k, a);
      for (const auto& [alpha, c] : res.terms()) {
        const auto j = aleph.index_of(alpha);
        if (!j) throw GramSpanError("mls", alpha.to_string());
        g(static_cast<Eigen::Index>(*j), static_cast<Eigen::Index>(k)) = c;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

Eigen::MatrixXd mls_q(const Dictionary& dict, const MonomialBasis& aleph, const Eigen::MatrixXd& M) {
  const auto n = static_cast<Eigen::Index>(aleph.size());
  if (M.rows() != n || M.cols() != n) throw DimensionError("moment matrix does not match the degree set");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dict.size()), static_cast<Eigen::Index>(dict.size()));
  for (const auto& g : mls_gamma(dict, aleph)) q += g.transpose() * M * g;
  return 0.5 * (q + q.transpose());
}

void objective_quadratic(ConicProgram& cp, std::size_t theta_block, const Eigen::MatrixXd& Q, double kappa) {
  const auto n = static_cast<Eigen::Index>(cp.block(theta_block).dim);
  if (Q.rows() != n || Q.cols() != n) throw DimensionError("quadratic form does not match the parameter block");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues();
  const double top = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::VectorXd> rows;
  for (Eigen::Index k = 0; k < n; ++k)
    if (lam(k) > 1e-14 * top) rows.push_back(std::sqrt(lam(k)) * es.eigenvectors().col(k));

  const std::size_t t = cp.add_block("t", BlockKind::Free, 1);
  const std::size_t u = cp.add_block("epigraph", BlockKind::Soc, 2 + rows.size());
  cp.add_row({{Term{u, 0, 0, 1.0}, Term{t, 0, 0, -1.0}}, 1.0, "epigraph t+1"});
  cp.add_row({{Term{u, 1, 0, 1.0}, Term{t, 0, 0, -1.0}}, -1.0, "epigraph t-1"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    LinearRow row;
    row.label = "epigraph L" + std::to_string(k);
    row.terms.push_back(Term{u, 2 + k, 0, 1.0});
    for (Eigen::Index i = 0; i < n; ++i)
      if (rows[k](i) != 0.0) row.terms.push_back(Term{theta_block, static_cast<std::size_t>(i), 0, -2.0 * rows[k](i)});
    cp.add_row(std::move(row));
  }
  cp.add_objective(Term{t, 0, 0, 1.0});
  if (std::isfinite(kappa)) cp.set_norm_ball(NormBall{theta_block, kappa});
}

}  // namespace stableid
