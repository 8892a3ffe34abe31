// Infeasible-start primal-dual interior-point method for
//   min c'x  s.t.  A x = b,  x in K  (K = product of PSD and second-order cones)
// after free variables have been eliminated. Both cone families use
// Nesterov-Todd scaling; the PSD scaling is formed from Cholesky factors and
// an SVD so that no explicit inverse of an iterate is needed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "lowering.hpp"
#include "stableid/conic.hpp"

namespace stableid {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using detail::Cone;

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

// The iteration runs in extended precision: the programs this library
// produces are degenerate, and double rounding stalls the method before the
// gap reaches the verification tolerance.
namespace core {

using Real = long double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

constexpr Real kInf = std::numeric_limits<Real>::infinity();
const Real kSqrt2 = std::sqrt(Real(2));

Vec svec(const Mat& m) {
  const auto n = m.rows();
  Vec v(n * (n + 1) / 2);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i)
      v(idx(detail::svec_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))) =
          i == j ? m(i, i) : kSqrt2 * 0.5L * (m(i, j) + m(j, i));
  return v;
}

Mat smat(const Vec& v, std::size_t dim) {
  const auto n = idx(dim);
  Mat m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      const Real e = v(idx(detail::svec_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
      m(i, j) = m(j, i) = i == j ? e : e / kSqrt2;
    }
  return m;
}

// ------------------------------------------------------------ Jordan algebra

Vec jprod(const Vec& a, const Vec& b) {
  Vec out(a.size());
  out(0) = a.dot(b);
  out.tail(a.size() - 1) = a(0) * b.tail(b.size() - 1) + b(0) * a.tail(a.size() - 1);
  return out;
}

// Solves lambda o u = r.
Vec jdiv(const Vec& lambda, const Vec& r) {
  const auto n = lambda.size();
  const Real det = lambda(0) * lambda(0) - lambda.tail(n - 1).squaredNorm();
  Vec u(n);
  u(0) = (lambda(0) * r(0) - lambda.tail(n - 1).dot(r.tail(n - 1))) / det;
  u.tail(n - 1) = (r.tail(n - 1) - u(0) * lambda.tail(n - 1)) / lambda(0);
  return u;
}

Real jnorm(const Vec& v) { return std::sqrt(std::max<Real>(0.0L, v(0) * v(0) - v.tail(v.size() - 1).squaredNorm())); }

struct NtScaling {
  Mat W;
  Mat Winv;
  Vec lambda;
};

// W x = W^{-1} z = lambda, W symmetric positive definite.
NtScaling nt_scaling(const Vec& x, const Vec& z) {
  const auto n = x.size();
  const Real xn = jnorm(x), zn = jnorm(z);
  const Vec xb = x / xn, zb = z / zn;
  const Real gamma = std::sqrt(0.5 * (1.0 + xb.dot(zb)));
  Vec w(n);
  w(0) = (zb(0) + xb(0)) / (2.0 * gamma);
  w.tail(n - 1) = (zb.tail(n - 1) - xb.tail(n - 1)) / (2.0 * gamma);
  const Real eta = std::sqrt(zn / xn);
  NtScaling s;
  s.W = Mat::Identity(n, n);
  s.W(0, 0) = w(0);
  s.W.block(0, 1, 1, n - 1) = w.tail(n - 1).transpose();
  s.W.block(1, 0, n - 1, 1) = w.tail(n - 1);
  s.W.bottomRightCorner(n - 1, n - 1) += w.tail(n - 1) * w.tail(n - 1).transpose() / (1.0 + w(0));
  s.Winv = s.W;
  s.Winv.block(0, 1, 1, n - 1) *= -1.0;
  s.Winv.block(1, 0, n - 1, 1) *= -1.0;
  s.W *= eta;
  s.Winv /= eta;
  s.lambda = s.W * x;
  return s;
}

// Largest step alpha with x + alpha dx in the cone.
Real soc_max_step(const Vec& x, const Vec& dx) {
  const auto n = x.size();
  const Real a = dx(0) * dx(0) - dx.tail(n - 1).squaredNorm();
  const Real b = 2.0 * (x(0) * dx(0) - x.tail(n - 1).dot(dx.tail(n - 1)));
  const Real c = x(0) * x(0) - x.tail(n - 1).squaredNorm();
  Real alpha = kInf;
  if (dx(0) < 0.0) alpha = -x(0) / dx(0);
  if (std::abs(a) < 1e-300) {
    if (b < 0.0) alpha = std::min(alpha, -c / b);
    return alpha;
  }
  const Real disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return alpha;
  const Real sq = std::sqrt(disc);
  const Real q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  for (Real root : {q / a, q != 0.0 ? c / q : kInf})
    if (root > 0.0) alpha = std::min(alpha, root);
  return alpha;
}

Real psd_max_step(const Mat& X, const Mat& dX) {
  Eigen::LLT<Mat> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const Mat L = llt.matrixL();
  Mat S = L.triangularView<Eigen::Lower>().solve(dX);
  S = L.triangularView<Eigen::Lower>().solve(S.transpose()).transpose();
  const Real lo = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
  return lo < 0.0 ? -1.0 / lo : kInf;
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

// ------------------------------------------------------------ core solver

struct CoreResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x, y, z;
  int iterations = 0;
  std::string message;
};

class CoreIpm {
 public:
  // `unit` is one objective unit of the original program in scaled terms,
  // so the relative gap is measured as the caller will verify it.
  CoreIpm(const Mat& A, const Vec& b, const Vec& c, const std::vector<Cone>& cones, const SolverOptions& opts,
          Real unit = 1.0)
      : A_(A), b_(b), c_(c), cones_(cones), opts_(opts), unit_(unit) {
    for (const Cone& k : cones_) nu_ += k.psd ? static_cast<Real>(k.dim) : 1.0;
  }

  CoreResult run();

 private:
  // PSD cones: W = G G', G^{-1} X G^{-T} = G' Z G = diag(d).
  struct PsdScaling {
    Mat G, Ginv, W;
    Vec d;
  };
  struct Scaling {
    std::vector<PsdScaling> psd;  // per cone (PSD only)
    std::vector<NtScaling> nt;    // per cone (SOC only)
  };

  Vec segment(const Vec& v, const Cone& k) const { return v.segment(idx(k.offset), idx(k.size())); }
  void initial_point(Vec& x, Vec& y, Vec& z) const;
  bool prepare(const Vec& x, const Vec& z, Scaling& s) const;
  Mat schur(const Scaling& s) const;
  Vec apply_h(const Scaling& s, const Vec& v) const;
  Vec complementarity_term(const Scaling& s, const Vec& x, Real sigma_mu, const Vec* dxa, const Vec* dza) const;
  Real max_step(const Vec& v, const Vec& dv) const;

  const Mat& A_;
  const Vec& b_;
  const Vec& c_;
  const std::vector<Cone>& cones_;
  SolverOptions opts_;
  Real unit_ = 1.0;
  Real nu_ = 0.0;
};

void CoreIpm::initial_point(Vec& x, Vec& y, Vec& z) const {
  x = Vec::Zero(A_.cols());
  z = Vec::Zero(A_.cols());
  y = Vec::Zero(A_.rows());
  for (const Cone& k : cones_) {
    const auto block = A_.middleCols(idx(k.offset), idx(k.size()));
    const Real n = static_cast<Real>(k.dim);
    Real xi = std::max<Real>(10.0L, std::sqrt(n)), eta = std::max<Real>(10.0L, std::sqrt(n));
    for (Eigen::Index i = 0; i < A_.rows(); ++i) {
      const Real norm_ai = block.row(i).norm();
      xi = std::max(xi, n * (1.0 + std::abs(b_(i))) / (1.0 + norm_ai));
      eta = std::max(eta, norm_ai);
    }
    eta = std::max(eta, segment(c_, k).norm());
    if (k.psd) {
      x.segment(idx(k.offset), idx(k.size())) = svec(Mat::Identity(idx(k.dim), idx(k.dim))) * xi;
      z.segment(idx(k.offset), idx(k.size())) = svec(Mat::Identity(idx(k.dim), idx(k.dim))) * eta;
    } else {
      x(idx(k.offset)) = xi;
      z(idx(k.offset)) = eta;
    }
  }
}

bool CoreIpm::prepare(const Vec& x, const Vec& z, Scaling& s) const {
  s.psd.assign(cones_.size(), PsdScaling());
  s.nt.assign(cones_.size(), NtScaling());
  for (std::size_t q = 0; q < cones_.size(); ++q) {
    const Cone& k = cones_[q];
    if (k.psd) {
      Eigen::LLT<Mat> lx(smat(segment(x, k), k.dim));
      Eigen::LLT<Mat> lz(smat(segment(z, k), k.dim));
      if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const Mat L = lx.matrixL();
      const Mat R = lz.matrixL();
      Eigen::JacobiSVD<Mat> svd(R.transpose() * L, Eigen::ComputeFullU | Eigen::ComputeFullV);
      PsdScaling& ps = s.psd[q];
      ps.d = svd.singularValues();
      if (!(ps.d.minCoeff() > 0.0)) return false;
      const Vec rs = ps.d.cwiseSqrt().cwiseInverse();
      ps.G = L * svd.matrixV() * rs.asDiagonal();
      // G^{-1} = D^{1/2} V' L^{-1}
      const Mat Linv = L.triangularView<Eigen::Lower>().solve(Mat::Identity(L.rows(), L.cols()));
      ps.Ginv = ps.d.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * Linv;
      ps.W = sym(ps.G * ps.G.transpose());
    } else {
      const Vec xs = segment(x, k), zs = segment(z, k);
      if (jnorm(xs) <= 0.0 || jnorm(zs) <= 0.0 || xs(0) <= 0.0 || zs(0) <= 0.0) return false;
      s.nt[q] = nt_scaling(xs, zs);
    }
  }
  return true;
}

Mat CoreIpm::schur(const Scaling& s) const {
  const Eigen::Index m = A_.rows();
  Mat M = Mat::Zero(m, m);
  for (std::size_t q = 0; q < cones_.size(); ++q) {
    const Cone& k = cones_[q];
    const auto Ak = A_.middleCols(idx(k.offset), idx(k.size()));
    if (k.psd) {
      Mat G(idx(k.size()), m);
      for (Eigen::Index l = 0; l < m; ++l) {
        const Vec row = Ak.row(l).transpose();
        if (row.squaredNorm() == 0.0) {
          G.col(l).setZero();
          continue;
        }
        const Mat a = smat(row, k.dim);
        G.col(l) = svec(sym(s.psd[q].W * a * s.psd[q].W));
      }
      M.noalias() += Ak * G;
    } else {
      const Mat H = s.nt[q].Winv * s.nt[q].Winv;
      M.noalias() += Ak * H * Ak.transpose();
    }
  }
  return sym(M);
}

Vec CoreIpm::apply_h(const Scaling& s, const Vec& v) const {
  Vec out(v.size());
  for (std::size_t q = 0; q < cones_.size(); ++q) {
    const Cone& k = cones_[q];
    if (k.psd) {
      const Mat d = smat(segment(v, k), k.dim);
      out.segment(idx(k.offset), idx(k.size())) = svec(sym(s.psd[q].W * d * s.psd[q].W));
    } else {
      out.segment(idx(k.offset), idx(k.size())) = s.nt[q].Winv * (s.nt[q].Winv * segment(v, k));
    }
  }
  return out;
}

// Direction component independent of dy: dx = term - H(dz).
Vec CoreIpm::complementarity_term(const Scaling& s, const Vec& x, Real sigma_mu, const Vec* dxa,
                                  const Vec* dza) const {
  Vec out(x.size());
  for (std::size_t q = 0; q < cones_.size(); ++q) {
    const Cone& k = cones_[q];
    if (k.psd) {
      // Solve lambda o U = rc in the scaled space, then map back.
      const PsdScaling& ps = s.psd[q];
      const auto n = idx(k.dim);
      Mat rc = sigma_mu * Mat::Identity(n, n);
      rc.diagonal() -= ps.d.cwiseAbs2();
      if (dxa) {
        const Mat dx = ps.Ginv * smat(segment(*dxa, k), k.dim) * ps.Ginv.transpose();
        const Mat dz = ps.G.transpose() * smat(segment(*dza, k), k.dim) * ps.G;
        rc -= sym(dx * dz);
      }
      Mat U(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) U(i, j) = 2.0 * rc(i, j) / (ps.d(i) + ps.d(j));
      out.segment(idx(k.offset), idx(k.size())) = svec(sym(ps.G * U * ps.G.transpose()));
    } else {
      const NtScaling& nt = s.nt[q];
      Vec e = Vec::Zero(idx(k.size()));
      e(0) = 1.0;
      Vec rc = sigma_mu * e - jprod(nt.lambda, nt.lambda);
      if (dxa) rc -= jprod(nt.W * segment(*dxa, k), nt.Winv * segment(*dza, k));
      out.segment(idx(k.offset), idx(k.size())) = nt.Winv * jdiv(nt.lambda, rc);
    }
  }
  return out;
}

Real CoreIpm::max_step(const Vec& v, const Vec& dv) const {
  Real alpha = kInf;
  for (const Cone& k : cones_) {
    if (k.psd)
      alpha = std::min(alpha, psd_max_step(smat(segment(v, k), k.dim), smat(segment(dv, k), k.dim)));
    else
      alpha = std::min(alpha, soc_max_step(segment(v, k), segment(dv, k)));
  }
  return alpha;
}

CoreResult CoreIpm::run() {
  CoreResult res;
  Vec x, y, z;
  initial_point(x, y, z);
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(A_);
  auto pinv_solve = [&](const Vec& r) -> Vec { return r.size() ? Vec(cod.solve(r)) : Vec::Zero(x.size()); };
  const Real bnorm = b_.size() ? b_.lpNorm<Eigen::Infinity>() : 0.0;
  const Real cnorm = c_.size() ? c_.lpNorm<Eigen::Infinity>() : 0.0;
  int stalls = 0;
  // Best iterate so far. Degenerate programs lose accuracy near the end, so
  // a failure exit falls back to it when it is within the acceptance level.
  CoreResult best;
  Real best_merit = kInf;
  int since_best = 0;
  auto fallback = [&](CoreResult& r, const std::string& why) -> CoreResult& {
    if (best_merit <= opts_.accept_tol) {
      best.status = SolveStatus::Optimal;
      best.message = "accepted best iterate (" + why + ")";
      best.iterations = r.iterations;
      return best;
    }
    r.message = why;
    return r;
  };
  for (int it = 0;; ++it) {
    res.iterations = it;
    const Vec rp = b_ - A_ * x;
    const Vec rd = c_ - A_.transpose() * y - z;
    const Real pobj = c_.dot(x), dobj = b_.dot(y);
    const Real mu = x.dot(z) / nu_;
    const Real relp = rp.size() ? rp.lpNorm<Eigen::Infinity>() / (1.0 + bnorm) : 0.0;
    const Real reld = rd.lpNorm<Eigen::Infinity>() / (1.0 + cnorm);
    const Real scale = unit_ + std::abs(pobj) + std::abs(dobj);
    const Real gap = std::max(std::abs(pobj - dobj), x.dot(z)) / scale;
    if (opts_.verbose)
      std::fprintf(stderr, "ipm %3d pobj % .10e dobj % .10e relp %.2e reld %.2e gap %.2e mu %.2e\n", it, double(pobj),
                   double(dobj), double(relp), double(reld), double(gap), double(mu));
    res.x = x;
    res.y = y;
    res.z = z;
    if (relp <= opts_.tol && reld <= opts_.tol && gap <= opts_.tol) {
      res.status = SolveStatus::Optimal;
      return res;
    }
    const Real merit = std::max({relp, reld, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = res;
      since_best = 0;
    } else if (++since_best >= 5 && best_merit <= opts_.accept_tol) {
      return fallback(res, "no progress");
    }
    // Farkas-type certificates: a feasible point would need norm >= 1/ratio.
    if (dobj > 0.0 && (c_ - rd).norm() / dobj <= 1e-9) {
      res.status = SolveStatus::Infeasible;
      res.message = "primal infeasibility certificate";
      return res;
    }
    if (pobj < 0.0 && (b_ - rp).norm() / -pobj <= 1e-9) {
      res.status = SolveStatus::Unbounded;
      res.message = "dual infeasibility certificate";
      return res;
    }
    if (it >= opts_.max_iter) return fallback(res, "iteration limit reached");

    Scaling s;
    if (!prepare(x, z, s)) return fallback(res, "iterate left the cone interior");
    Mat M = schur(s);
    // Cholesky while the Schur matrix is safely definite, otherwise a
    // pseudo-inverse that drops the numerically singular directions
    Eigen::LLT<Mat> llt(M);
    const bool use_llt = llt.info() == Eigen::Success;
    Eigen::SelfAdjointEigenSolver<Mat> eig;
    Vec inv_lambda;
    if (!use_llt) {
      eig.compute(0.5 * (M + M.transpose()));
      if (eig.info() != Eigen::Success) return fallback(res, "Schur complement factorization failed");
      const Vec& lam = eig.eigenvalues();
      const Real top = lam.size() ? lam.cwiseAbs().maxCoeff() : 1.0;
      inv_lambda = lam.unaryExpr([top](Real l) { return l > 1e-15 * top ? 1.0 / l : 0.0; });
      if (opts_.verbose) std::fprintf(stderr, "ipm     Schur complement is singular, using its pseudo-inverse\n");
    }
    auto schur_solve = [&](const Vec& v) -> Vec {
      if (use_llt) return llt.solve(v);
      const Mat& V = eig.eigenvectors();
      return V * inv_lambda.cwiseProduct(V.transpose() * v);
    };

    const Vec hrd = apply_h(s, rd);
    auto direction = [&](const Vec& term, Vec& dx, Vec& dy, Vec& dz) {
      const Vec rhs = rp - A_ * (term - hrd);
      dy = schur_solve(rhs);
      dz = rd - A_.transpose() * dy;
      dx = term - apply_h(s, dz);
      // refine against the operator A H A' itself, which the formed Schur
      // matrix only approximates once H is badly conditioned
      for (int k = 0; k < 3; ++k) {
        const Vec r = rp - A_ * dx;
        if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rp.lpNorm<Eigen::Infinity>() + bnorm)) break;
        const Vec ddy = schur_solve(r);
        const Vec adz = A_.transpose() * ddy;
        dy += ddy;
        dz -= adz;
        dx += apply_h(s, adz);
      }
      // whatever remains is removed by a minimum-norm correction, so the
      // primal residual cannot drift when the Schur solve degrades
      dx += pinv_solve(rp - A_ * dx);
    };

    Vec dxa, dya, dza;
    direction(complementarity_term(s, x, 0.0, nullptr, nullptr), dxa, dya, dza);
    const Real ap_a = std::min<Real>(1.0L, max_step(x, dxa));
    const Real ad_a = std::min<Real>(1.0L, max_step(z, dza));
    const Real mu_aff = (x + ap_a * dxa).dot(z + ad_a * dza) / nu_;
    const Real sigma = std::clamp<Real>(std::pow(mu_aff / mu, Real(3)), 0.0L, 1.0L);

    Vec dx, dy, dz;
    direction(complementarity_term(s, x, sigma * mu, &dxa, &dza), dx, dy, dz);
    const Real gamma = 0.9 + 0.09 * std::min(ap_a, ad_a);
    const Real ap = std::min<Real>(1.0L, gamma * max_step(x, dx));
    const Real ad = std::min<Real>(1.0L, gamma * max_step(z, dz));
    if (!dx.allFinite() || !dz.allFinite() || !dy.allFinite()) return fallback(res, "non-finite search direction");
    if (opts_.verbose) std::fprintf(stderr, "ipm     sigma %.2Le steps %.2Le %.2Le (affine %.2Le %.2Le)\n", sigma, ap, ad, ap_a, ad_a);
    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) return fallback(res, "step length stalled");
  }
}

}  // namespace core

// ------------------------------------------------------------ elimination

struct Reduction {
  SolveStatus early = SolveStatus::Optimal;  ///< Infeasible / Unbounded detected while reducing
  std::string message;
  Mat A;   // scaled independent rows acting on the cone vector
  Vec b;
  Vec c;
  // recovery
  Eigen::Index rank = 0;
  Mat Q1, Q2;
  Mat R11;
  Vec u;                                   // multipliers on the Q1 rows
  Eigen::PermutationMatrix<Eigen::Dynamic> perm;
  std::vector<Eigen::Index> kept;          // rows of Q2'A kept
  Vec row_scale;
};

Reduction reduce(const detail::LoweredProgram& lp) {
  Reduction red;
  const Eigen::Index m = idx(lp.rows());
  const Eigen::Index nf = idx(lp.n_free);
  Mat A2;
  Vec b2;
  red.c = lp.c_cone;
  if (nf > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr(lp.A_free);
    qr.setThreshold(1e-10);
    red.rank = qr.rank();
    const Mat Q = qr.householderQ();
    const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    red.perm = qr.colsPermutation();
    const Eigen::Index r = red.rank;
    red.Q1 = Q.leftCols(r);
    red.Q2 = Q.rightCols(m - r);
    red.R11 = R.topLeftCorner(r, r);
    const Vec ct = red.perm.transpose() * lp.c_free;
    red.u = R.topLeftCorner(r, r).transpose().triangularView<Eigen::Lower>().solve(ct.head(r));
    const Vec g = ct.tail(nf - r) - R.block(0, r, r, nf - r).transpose() * red.u;
    if (g.size() && g.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + ct.lpNorm<Eigen::Infinity>())) {
      red.early = SolveStatus::Unbounded;
      red.message = "objective decreases along a free direction that no constraint restricts";
      return red;
    }
    A2 = red.Q2.transpose() * lp.A_cone;
    b2 = red.Q2.transpose() * lp.b;
    red.c -= lp.A_cone.transpose() * (red.Q1 * red.u);
  } else {
    A2 = lp.A_cone;
    b2 = lp.b;
  }
  const double bnorm = b2.size() ? b2.lpNorm<Eigen::Infinity>() : 0.0;
  // Rows that the rotation reduced to rounding noise are exact zeros.
  const double row_floor = 1e-11 * std::max(1.0, lp.A_cone.size() ? lp.A_cone.rowwise().norm().maxCoeff() : 0.0);
  for (Eigen::Index k = 0; k < A2.rows(); ++k)
    if (A2.row(k).norm() <= row_floor) A2.row(k).setZero();
  if (A2.rows() > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr(A2.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index r2 = qr.rank();
    const auto& p = qr.colsPermutation().indices();
    const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    Vec bp(A2.rows());
    for (Eigen::Index k = 0; k < A2.rows(); ++k) bp(k) = b2(p(k));
    if (r2 < A2.rows()) {
      const Vec s = R.topLeftCorner(r2, r2).transpose().triangularView<Eigen::Lower>().solve(bp.head(r2));
      const Vec miss = bp.tail(A2.rows() - r2) - R.block(0, r2, r2, A2.rows() - r2).transpose() * s;
      if (miss.lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + bnorm)) {
        red.early = SolveStatus::Infeasible;
        red.message = "equality constraints are inconsistent";
        return red;
      }
    }
    for (Eigen::Index k = 0; k < r2; ++k) red.kept.push_back(p(k));
    std::sort(red.kept.begin(), red.kept.end());
  }
  const auto mk = idx(red.kept.size());
  red.A.resize(mk, A2.cols());
  red.b.resize(mk);
  red.row_scale.resize(mk);
  for (Eigen::Index k = 0; k < mk; ++k) {
    const double n = A2.row(red.kept[static_cast<std::size_t>(k)]).norm();
    red.row_scale(k) = 1.0 / n;
    red.A.row(k) = A2.row(red.kept[static_cast<std::size_t>(k)]) / n;
    red.b(k) = b2(red.kept[static_cast<std::size_t>(k)]) / n;
  }
  return red;
}

}  // namespace

Solution solve(const ConicProgram& cp, const SolverOptions& opts) {
  Solution sol;
  sol.backend = "stableid-ipm";
  const detail::LoweredProgram lp = detail::lower(cp);
  const Reduction red = reduce(lp);
  if (red.early != SolveStatus::Optimal) {
    sol.status = red.early;
    sol.message = red.message;
    sol.values = cp.zero_values();
    return sol;
  }
  if (lp.cones.empty()) {
    // Only free variables: a consistent linear system, solved by least squares.
    sol.status = SolveStatus::Optimal;
    Vec xc = Vec::Zero(0), xf = Vec::Zero(idx(lp.n_free));
    if (lp.n_free) {
      xf = lp.A_free.completeOrthogonalDecomposition().solve(lp.b);
    }
    sol.values = detail::unpack(cp, lp, xf, xc);
    Vec y = Vec::Zero(idx(lp.rows()));
    if (red.rank) y = red.Q1 * red.u;
    sol.dual = y;
    sol.objective = lp.c_free.dot(xf) + lp.c0;
    return sol;
  }

  const double bscale = std::max(1.0, red.b.size() ? red.b.lpNorm<Eigen::Infinity>() : 0.0);
  const double cscale = std::max(1.0, red.c.lpNorm<Eigen::Infinity>());
  const Vec bs = red.b / bscale, cs = red.c / cscale;
  const core::Mat Ax = red.A.cast<core::Real>();
  const core::Vec bx = bs.cast<core::Real>(), cx = cs.cast<core::Real>();
  core::CoreIpm ipm(Ax, bx, cx, lp.cones, opts, 1.0L / (bscale * cscale));
  const core::CoreResult res = ipm.run();
  const Vec xc = res.x.cast<double>() * bscale;
  const Vec v = res.y.cast<double>() * cscale;

  // Recover the free variables and the multipliers of the lowered rows.
  Vec xf = Vec::Zero(idx(lp.n_free));
  Vec y = Vec::Zero(idx(lp.rows()));
  Vec v2 = Vec::Zero(lp.n_free ? red.Q2.cols() : idx(lp.rows()));
  for (std::size_t k = 0; k < red.kept.size(); ++k)
    v2(red.kept[k]) = v(idx(k)) * red.row_scale(idx(k));
  if (lp.n_free) {
    const Eigen::Index r = red.rank;
    Vec xt = Vec::Zero(idx(lp.n_free));
    if (r > 0)
      xt.head(r) = red.R11.triangularView<Eigen::Upper>().solve(red.Q1.transpose() * (lp.b - lp.A_cone * xc));
    xf = red.perm * xt;
    y = red.Q2 * v2;
    if (r > 0) y += red.Q1 * red.u;
  } else {
    y = v2;
  }

  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.message = res.message;
  sol.values = detail::unpack(cp, lp, xf, xc);
  sol.dual = y;
  sol.objective = cp.evaluate(cp.objective(), sol.values) + cp.objective_constant();
  if (sol.status == SolveStatus::Optimal) {
    const ResidualReport rep = verify(cp, sol);
    if (!rep.within_tolerance) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "converged but failed verification: " + rep.summary();
    }
  }
  return sol;
}

}  // namespace stableid
