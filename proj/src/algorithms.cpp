#include "stableid/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "stableid/errors.hpp"
#include "stableid/sos.hpp"

namespace stableid {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string basis_text(const std::optional<MonomialBasis>& b) {
  if (!b) return "auto";
  std::string out;
  for (const auto& alpha : *b) {
    if (!out.empty()) out += ' ';
    out += alpha.to_string();
  }
  return out;
}

// Solves and raises on anything but a certified optimum.
Solution solve_certified(const ConicProgram& cp, const SolverOptions& opts, const std::string& what) {
  Solution sol = solve(cp, opts);
  switch (sol.status) {
    case SolveStatus::Optimal:
      return sol;
    case SolveStatus::Infeasible:
      throw IdentificationError(what + ": constraint set is empty for this dictionary (" + sol.message + ")");
    case SolveStatus::Unbounded:
      throw IdentificationError(what + ": objective is unbounded (" + sol.message + ")");
    case SolveStatus::NumericalFailure:
      break;
  }
  throw IdentificationError(what + ": solver failed (" + sol.message + ")");
}

void stamp(ProjectiveModel& m, Algorithm algo, const DataSet& ds, const IdentConfig& cfg, const Solution& sol) {
  m.provenance.algorithm = std::string(to_string(algo));
  m.provenance.dataset_hash = ds.content_hash();
  m.provenance.seed = cfg.seed;
  m.provenance.backend = sol.backend;
  m.provenance.config = cfg.to_json();
}

// Quadratic estimators share everything but the matrix Q.
IdentResult quadratic_estimator(Algorithm algo, const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  if (ds.n_x() != dict.n_x() || ds.n_w() != dict.n_w()) throw DimensionError("data set does not match the dictionary");
  const MonomialBasis aleph = mls_aleph(dict);
  std::vector<double> clamped;
  Eigen::MatrixXd M;
  if (algo == Algorithm::LS) {
    M = data_gram_matrix(ds, aleph).matrix;
  } else {
    const MomentMatrix mm = project(moment_matrix(ds, aleph, cfg.moments));
    M = mm.matrix;
    clamped = mm.clamped_eigenvalues;
  }
  const Eigen::MatrixXd Q = mls_q(dict, aleph, M);

  const MonomialBasis lambda = cfg.lambda ? *cfg.lambda : default_lambda(dict, cfg.delta);
  OmegaProgram op = build_omega_constraints(dict, cfg.delta, lambda);
  objective_quadratic(op.cp, op.theta, Q, cfg.kappa);
  const Solution sol = solve_certified(op.cp, cfg.solver, std::string(to_string(algo)));

  const Eigen::VectorXd theta = sol.values[op.theta];
  IdentResult res(ProjectiveModel(dict, theta, cfg.delta));
  stamp(res.model, algo, ds, cfg, sol);
  res.status = sol.status;
  res.objective = theta.dot(Q * theta);
  res.report = verify(op.cp, sol);
  res.gram_size = lambda.size();
  res.rows = op.cp.rows().size();
  res.iterations = sol.iterations;
  res.clamped_eigenvalues = std::move(clamped);
  res.wall_ms = elapsed_ms(start);
  return res;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::A:
      return "A";
    case Algorithm::LS:
      return "ls";
    case Algorithm::MLS:
      return "mls";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "a") return Algorithm::A;
  if (t == "ls") return Algorithm::LS;
  if (t == "mls") return Algorithm::MLS;
  throw std::invalid_argument("unknown algorithm '" + std::string(text) + "' (expected A, ls or mls)");
}

void IdentConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be positive and finite");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (eps && (!(*eps > 0.0) || !std::isfinite(*eps))) throw std::invalid_argument("eps must be positive and finite");
  if (!(moment_regularization >= 0.0) || !std::isfinite(moment_regularization))
    throw std::invalid_argument("moment regularization must be >= 0");
  if (pi_degree && *pi_degree < 1) throw std::invalid_argument("Gram basis degree must be at least 1");
}

std::string IdentConfig::to_json() const {
  nlohmann::json j;
  j["delta"] = delta;
  j["kappa"] = std::isfinite(kappa) ? nlohmann::json(kappa) : nlohmann::json("inf");
  j["eps"] = eps.value_or(delta);
  j["pi_degree"] = pi_degree ? nlohmann::json(*pi_degree) : nlohmann::json("auto");
  if (pi) j["pi"] = basis_text(pi);
  if (lambda) j["lambda"] = basis_text(lambda);
  j["aleph"] = basis_text(aleph);
  j["surrogate_psd"] = surrogate_psd;
  j["moment_regularization"] = moment_regularization;
  j["moment_permutations"] = moments.permutations;
  j["solver_tol"] = solver.tol;
  j["solver_max_iter"] = solver.max_iter;
  j["seed"] = seed;
  return j.dump();
}

IdentResult algorithm_A(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  if (ds.n_x() != dict.n_x() || ds.n_w() != dict.n_w()) throw DimensionError("data set does not match the dictionary");
  const MonomialBasis aleph = cfg.aleph ? *cfg.aleph : mls_aleph(dict);
  if (aleph.var_count() != ds.n_z()) throw DimensionError("degree set must be over z = [xi; x; w]");
  const MomentMatrix mm = project(moment_matrix(ds, aleph, cfg.moments));

  const Eigen::MatrixXd& C = ds.output_map();
  MonomialBasis pi;
  if (cfg.pi) pi = *cfg.pi;
  else if (cfg.pi_degree) pi = pi_of_degree(dict, C, aleph, *cfg.pi_degree);
  else pi = default_pi(dict, C, aleph);

  ThetaOptions topts;
  topts.delta = cfg.delta;
  topts.eps = cfg.eps;
  topts.surrogate_psd = cfg.surrogate_psd;
  ThetaProgram tp = build_theta_constraints(dict, C, pi, aleph, topts);
  Eigen::MatrixXd Mr = mm.matrix;
  if (cfg.moment_regularization > 0.0 && Mr.size()) {
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Mr, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    Mr.diagonal().array() += cfg.moment_regularization * std::max(top, 0.0);
  }
  objective_A(tp.cp, tp.R, Mr, cfg.kappa);
  const Solution sol = solve_certified(tp.cp, cfg.solver, "A");

  IdentResult res(ProjectiveModel(dict, sol.values[tp.theta], cfg.delta));
  stamp(res.model, Algorithm::A, ds, cfg, sol);
  const Eigen::MatrixXd& R = sol.values[tp.R];
  res.surrogate = surrogate_from_gram(0.5 * (R + R.transpose()), aleph);
  res.status = sol.status;
  res.objective = (mm.matrix.cwiseProduct(R)).sum();
  res.jhat = jhat_r(*res.surrogate, ds);
  res.report = verify(tp.cp, sol);
  res.gram_size = tp.identities[0].gram_basis.size() + tp.identities[1].gram_basis.size();
  res.rows = tp.cp.rows().size();
  res.iterations = sol.iterations;
  res.clamped_eigenvalues = mm.clamped_eigenvalues;
  res.wall_ms = elapsed_ms(start);
  return res;
}

IdentResult least_squares(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg) {
  return quadratic_estimator(Algorithm::LS, ds, dict, cfg);
}

IdentResult modified_least_squares(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg) {
  return quadratic_estimator(Algorithm::MLS, ds, dict, cfg);
}

IdentResult identify(Algorithm algo, const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg) {
  switch (algo) {
    case Algorithm::A:
      return algorithm_A(ds, dict, cfg);
    case Algorithm::LS:
      return least_squares(ds, dict, cfg);
    case Algorithm::MLS:
      return modified_least_squares(ds, dict, cfg);
  }
  throw std::invalid_argument("unknown algorithm");
}

DataSet replicated(const DataSet& ds, std::size_t copies) {
  if (copies == 0) throw std::invalid_argument("replicated: copies must be positive");
  std::vector<Eigen::MatrixXd> states;
  for (std::size_t c = 0; c < copies; ++c)
    for (const auto& x : ds.states()) states.push_back(x);
  return DataSet(ds.input(), std::move(states), ds.output_map());
}

std::vector<PersistencePoint> persistence_diagnostic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                                                     const MonomialBasis& aleph,
                                                     const std::vector<std::size_t>& horizons) {
  if (x.rows() != w.rows()) throw DimensionError("state and input sequences differ in length");
  std::vector<PersistencePoint> out;
  for (std::size_t T : horizons) {
    if (T == 0 || static_cast<Eigen::Index>(T) >= x.rows())
      throw std::invalid_argument("horizon " + std::to_string(T) + " is outside the sequence");
    const auto rows = static_cast<Eigen::Index>(T + 1);
    const MomentMatrix m = standard_moment_matrix({x.topRows(rows)}, w.topRows(rows), aleph);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.matrix).eigenvalues();
    out.push_back({T, ev.minCoeff(), ev.maxCoeff()});
  }
  return out;
}

}  // namespace stableid
