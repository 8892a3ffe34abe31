#include "stableid/moments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "stableid/errors.hpp"

namespace stableid {

namespace {

constexpr double kJitter = 1e-10;

// Moment over one fixed experiment assignment: factor i reads experiment order[i].
double linearized_moment_assigned(const DataSet& ds, const VectorDegree& alpha,
                                  const std::vector<std::size_t>& order) {
  const std::size_t deg = static_cast<std::size_t>(alpha.total_degree());
  const std::size_t nx = ds.n_x();
  const std::size_t horizon = ds.horizon();
  std::vector<std::size_t> coord(deg);
  for (std::size_t i = 0; i < deg; ++i) coord[i] = beta_index(alpha, i);
  const auto& w = ds.input();
  double sum = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    double prod = 1.0;
    const auto ti = static_cast<Eigen::Index>(t);
    for (std::size_t i = 0; i < deg; ++i) {
      const std::size_t d = coord[i];
      const auto& x = ds.state(order[i]);
      double value;
      if (d < nx)
        value = x(ti, static_cast<Eigen::Index>(d));
      else if (d < 2 * nx)
        value = x(ti - 1, static_cast<Eigen::Index>(d - nx));
      else
        value = w(ti, static_cast<Eigen::Index>(d - 2 * nx));
      prod *= value;
    }
    sum += prod;
  }
  return sum / static_cast<double>(horizon);
}

}  // namespace

double linearized_moment(const DataSet& ds, const VectorDegree& alpha, const MomentOptions& opts) {
  if (alpha.size() != ds.n_z())
    throw DimensionError("linearized_moment: degree has " + std::to_string(alpha.size()) +
                         " entries, n_z = " + std::to_string(ds.n_z()));
  const auto deg = static_cast<std::size_t>(alpha.total_degree());
  if (deg > ds.experiments()) throw InsufficientExperiments(alpha.total_degree(), ds.experiments());
  std::vector<std::size_t> order(ds.experiments());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double value = linearized_moment_assigned(ds, alpha, order);
  if (opts.permutations == 0 || deg == 0) return value;
  std::mt19937_64 gen(opts.seed);
  for (std::size_t k = 0; k < opts.permutations; ++k) {
    std::shuffle(order.begin(), order.end(), gen);
    value += linearized_moment_assigned(ds, alpha, order);
  }
  return value / static_cast<double>(opts.permutations + 1);
}

double standard_moment(const Eigen::MatrixXd& xbar, const Eigen::MatrixXd& w, const VectorDegree& alpha) {
  if (xbar.rows() != w.rows()) throw DimensionError("standard_moment: trajectory lengths differ");
  if (xbar.rows() < 2) throw DimensionError("standard_moment: need T >= 1");
  const auto nz = static_cast<std::size_t>(2 * xbar.cols() + w.cols());
  if (alpha.size() != nz) throw DimensionError("standard_moment: degree size does not match n_z");
  const std::size_t horizon = static_cast<std::size_t>(xbar.rows()) - 1;
  double sum = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    const Eigen::VectorXd z = embed_point(xbar, w, t);
    sum += monomial_eval(alpha, std::span<const double>(z.data(), nz));
  }
  return sum / static_cast<double>(horizon);
}

MonomialBasis default_aleph(std::size_t experiments, std::size_t n_z) {
  if (experiments < 2) throw std::invalid_argument("default_aleph: need N >= 2");
  return basis_up_to_degree(n_z, static_cast<int>(experiments / 2));
}

int max_pair_degree(const MonomialBasis& aleph) { return 2 * aleph.max_degree(); }

namespace {

// Evaluates a per-degree moment function once for every distinct alpha_j1 + alpha_j2.
template <class MomentFn>
Eigen::MatrixXd assemble(const MonomialBasis& aleph, MomentFn&& moment) {
  const auto n = static_cast<Eigen::Index>(aleph.size());
  Eigen::MatrixXd m(n, n);
  std::map<VectorDegree, double> cache;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const VectorDegree sum = aleph[static_cast<std::size_t>(a)] + aleph[static_cast<std::size_t>(b)];
      auto it = cache.find(sum);
      if (it == cache.end()) it = cache.emplace(sum, moment(sum)).first;
      m(a, b) = m(b, a) = it->second;
    }
  }
  return m;
}

}  // namespace

MomentMatrix moment_matrix(const DataSet& ds, const MonomialBasis& aleph, const MomentOptions& opts) {
  if (aleph.empty()) throw std::invalid_argument("moment_matrix: empty degree set");
  if (aleph.var_count() != ds.n_z()) throw DimensionError("moment_matrix: degree set size != n_z");
  const int need = max_pair_degree(aleph);
  if (static_cast<std::size_t>(need) > ds.experiments())
    throw InsufficientExperiments(need, ds.experiments());
  MomentMatrix out;
  out.aleph = aleph;
  // Each entry depends only on alpha_j1 + alpha_j2, so the raw matrix is
  // already symmetric and equals its symmetrization.
  out.matrix = assemble(aleph, [&](const VectorDegree& a) { return linearized_moment(ds, a, opts); });
  return out;
}

MomentMatrix standard_moment_matrix(const std::vector<Eigen::MatrixXd>& trajectories,
                                    const Eigen::MatrixXd& w, const MonomialBasis& aleph) {
  if (trajectories.empty()) throw std::invalid_argument("standard_moment_matrix: no trajectories");
  MomentMatrix out;
  out.aleph = aleph;
  out.matrix = assemble(aleph, [&](const VectorDegree& a) {
    double s = 0.0;
    for (const auto& x : trajectories) s += standard_moment(x, w, a);
    return s / static_cast<double>(trajectories.size());
  });
  return out;
}

MomentMatrix data_gram_matrix(const DataSet& ds, const MonomialBasis& aleph) {
  return standard_moment_matrix(ds.states(), ds.input(), aleph);
}

PsdProjection psd_project(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw DimensionError("psd_project: matrix not square");
  if (!symmetric.allFinite()) throw std::invalid_argument("psd_project: non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd lambda = es.eigenvalues();
  PsdProjection out;
  bool any_negative = false;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) < 0.0) {
      any_negative = true;
      if (lambda(k) < -kJitter) out.clamped.push_back(lambda(k));
      lambda(k) = 0.0;
    }
  }
  if (!any_negative) {
    out.matrix = sym;
    return out;
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  out.matrix = v * lambda.asDiagonal() * v.transpose();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
  return out;
}

MomentMatrix project(const MomentMatrix& m) {
  MomentMatrix out = m;
  auto p = psd_project(m.matrix);
  out.matrix = std::move(p.matrix);
  out.clamped_eigenvalues = std::move(p.clamped);
  out.projected = true;
  return out;
}

void write_moment_csv(const MomentMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.matrix.cols(); ++j) out << (j ? "," : "") << m.matrix(i, j);
    out << '\n';
  }
  std::ofstream deg(path.string() + ".degrees");
  for (const auto& a : m.aleph) {
    for (std::size_t d = 0; d < a.size(); ++d) deg << (d ? " " : "") << a[d];
    deg << '\n';
  }
}

}  // namespace stableid
