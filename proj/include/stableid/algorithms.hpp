#pragma once

// End-to-end estimators: the certified moment-based Algorithm A, least
// squares and modified least squares over the monotone set, and the
// persistence-of-excitation diagnostic.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stableid/conic.hpp"
#include "stableid/dataset.hpp"
#include "stableid/dictionary.hpp"
#include "stableid/model.hpp"
#include "stableid/moments.hpp"
#include "stableid/poly.hpp"

namespace stableid {

enum class Algorithm { A, LS, MLS };
std::string_view to_string(Algorithm a);
/// Accepts "A", "ls", "mls" (case-insensitive).
Algorithm parse_algorithm(std::string_view text);

struct IdentConfig {
  double delta = 0.01;
  double kappa = std::numeric_limits<double>::infinity();  ///< infinity = no norm ball
  std::optional<double> eps;                                ///< defaults to delta
  std::optional<int> pi_degree;                             ///< empty = automatic
  std::optional<MonomialBasis> pi;                          ///< overrides pi_degree
  std::optional<MonomialBasis> lambda;                      ///< monotone-set Gram basis
  std::optional<MonomialBasis> aleph;                       ///< defaults to mls_aleph(dict)
  bool surrogate_psd = true;
  /// Algorithm A minimizes trace(R (M + eta I)), eta = this times the largest
  /// eigenvalue of M. Null directions of the projected M otherwise leave the
  /// optimal face unbounded and the interior-point method stalls.
  double moment_regularization = 1e-8;
  MomentOptions moments;
  SolverOptions solver;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless delta > 0, kappa > 0, eps > 0 and
  /// moment_regularization >= 0.
  void validate() const;
  std::string to_json() const;
};

struct IdentResult {
  explicit IdentResult(ProjectiveModel m) : model(std::move(m)) {}

  ProjectiveModel model;
  std::optional<SurrogatePair> surrogate;  ///< Algorithm A only
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;  ///< trace(R M) for A (unregularized M), theta' Q theta for LS / MLS
  double jhat = std::numeric_limits<double>::quiet_NaN();  ///< surrogate average on the data (A only)
  ResidualReport report;
  std::size_t gram_size = 0;  ///< total dimension of the Gram blocks
  std::size_t rows = 0;       ///< equality rows of the conic program
  int iterations = 0;
  double wall_ms = 0.0;
  std::vector<double> clamped_eigenvalues;  ///< from the moment projection
};

/// Minimizes trace(R M) over the certified model set, M the projected matrix
/// of linearized moments. Throws InsufficientExperiments, or
/// IdentificationError when the program is infeasible or the solve fails.
IdentResult algorithm_A(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg = {});

/// Equation-error least squares on the measured data over the monotone set.
IdentResult least_squares(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg = {});

/// Least squares with the data Gram matrix replaced by projected linearized moments.
IdentResult modified_least_squares(const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg = {});

IdentResult identify(Algorithm algo, const DataSet& ds, const Dictionary& dict, const IdentConfig& cfg = {});

/// Copies every experiment `copies` times (noiseless data stand in for
/// repeated experiments).
DataSet replicated(const DataSet& ds, std::size_t copies);

struct PersistencePoint {
  std::size_t horizon = 0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

/// Extreme eigenvalues of the standard moment matrix over the degree set,
/// built from samples t = 1..T of the given trajectory, for each T.
std::vector<PersistencePoint> persistence_diagnostic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                                                     const MonomialBasis& aleph,
                                                     const std::vector<std::size_t>& horizons);

}  // namespace stableid
