#pragma once

// Empirical moments of embedded samples z(t) = [x(t); x(t-1); w(t)].
//
// The linearized moment distributes the factors of z^alpha across distinct
// experiments (factor i reads experiment i), so that with independent
// zero-mean measurement noise every noise product has zero mean.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "stableid/dataset.hpp"
#include "stableid/poly.hpp"

namespace stableid {

struct MomentOptions {
  /// Average over this many random experiment-to-factor assignments in
  /// addition to the identity assignment. 0 = assignment exactly as defined.
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

/// (1/T) sum_{t=1..T} prod_{i < |alpha|} [z_i(t)]_{beta(i)}.
double linearized_moment(const DataSet& ds, const VectorDegree& alpha,
                         const MomentOptions& opts = {});

/// (1/T) sum_{t=1..T} zbar(t)^alpha, zbar(t) = [xbar(t); xbar(t-1); w(t)].
double standard_moment(const Eigen::MatrixXd& xbar, const Eigen::MatrixXd& w,
                       const VectorDegree& alpha);

/// All alpha over n_z variables with 2|alpha| <= N.
MonomialBasis default_aleph(std::size_t experiments, std::size_t n_z);

/// Largest |alpha_j1 + alpha_j2| over the degree set.
int max_pair_degree(const MonomialBasis& aleph);

struct MomentMatrix {
  MonomialBasis aleph;
  Eigen::MatrixXd matrix;
  bool projected = false;
  /// Eigenvalues clamped by the projection (below -1e-10), most negative first.
  std::vector<double> clamped_eigenvalues;
};

/// Symmetrized matrix of linearized moments indexed by the degree set.
MomentMatrix moment_matrix(const DataSet& ds, const MonomialBasis& aleph,
                           const MomentOptions& opts = {});

/// (1/N) sum_i of standard moment matrices of the given trajectories.
MomentMatrix standard_moment_matrix(const std::vector<Eigen::MatrixXd>& trajectories,
                                    const Eigen::MatrixXd& w, const MonomialBasis& aleph);

/// Standard moment matrix of the measured trajectories themselves, averaged
/// over experiments (the Gram matrix used by least squares).
MomentMatrix data_gram_matrix(const DataSet& ds, const MonomialBasis& aleph);

struct PsdProjection {
  Eigen::MatrixXd matrix;
  std::vector<double> clamped;  ///< eigenvalues below -1e-10 that were set to zero
};

/// Frobenius-nearest positive semidefinite matrix (eigenvalues clipped at 0).
/// Throws std::invalid_argument on non-finite input.
PsdProjection psd_project(const Eigen::MatrixXd& symmetric);

/// Returns the projected copy with `projected` set.
MomentMatrix project(const MomentMatrix& m);

/// Dense row-major CSV of the matrix, plus `<path>.degrees` listing one
/// degree per line (space separated exponents) in index order.
void write_moment_csv(const MomentMatrix& m, const std::filesystem::path& path);

}  // namespace stableid
