#pragma once

// Benchmark experiment: the scalar system
//   x(t+1) + x(t+1)^5 / 5 = x(t)^3 / 3 + 5 u(t),  x(0) = 0,
// driven by i.i.d. uniform inputs on [-1, 1] and observed in N independent
// Gaussian-noise trials, identified by each estimator across horizons.
//
// Random streams (CounterRng, keyed by the realization seed):
//   "train-input", "noise/<i>" for trial i, "validation-input".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableid/algorithms.hpp"
#include "stableid/dataset.hpp"
#include "stableid/model.hpp"

namespace stableid {

/// Root of x + x^5 / 5 = rhs (bisection, then Newton polish; residual <= 1e-12).
double true_e_inverse(double rhs);
/// x(t) = a0(x(t-1), w(t)) of the benchmark system, w(t) = u(t-1).
double true_step(double x_prev, double w);
Stepper true_stepper();

struct ExampleData {
  DataSet data;             ///< noisy trials, w(t) = u(t-1), row 0 of w is zero
  Eigen::MatrixXd truth;    ///< (T+1) x 1 noiseless state
  Eigen::MatrixXd input;    ///< (T+1) x 1 input u(0..T), last entry unused
};

/// Draws u, advances the true system from 0 and adds noise of the given
/// standard deviation to every trial. `truncate_sigmas` > 0 clips each noise
/// sample at that many standard deviations.
ExampleData gen_example_data(std::size_t horizon, std::size_t trials, double noise_std, std::uint64_t seed,
                             double truncate_sigmas = 0.0);

/// Sum |x_val - x_model|^2 / sum |x_val|^2 over t = 0..horizon, both simulated
/// from 0 on an independent validation input. Throws SimulationFailure.
double validate(const Stepper& model, std::uint64_t seed, std::size_t horizon);
double validate(const ProjectiveModel& model, std::uint64_t seed, std::size_t horizon);

/// Largest |a_model(x, w) - a0(x, w)| over a grid on [-2, 2] x [-1, 1].
double sup_grid_error(const Stepper& model, std::size_t nx_points = 41, std::size_t nw_points = 21);

struct BenchmarkSpec {
  std::vector<std::size_t> horizons = {100, 200, 400, 800};
  std::size_t realizations = 20;
  std::size_t trials = 10;
  double noise_std = 0.3;
  double truncate_sigmas = 0.0;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms = {Algorithm::A, Algorithm::LS, Algorithm::MLS};
  IdentConfig config;
  std::size_t threads = 0;  ///< 0 = hardware concurrency

  /// Throws std::invalid_argument on empty or non-increasing horizons,
  /// negative noise, zero realizations or trials.
  void validate() const;
  /// Seed of realization k.
  std::uint64_t realization_seed(std::size_t k) const;
};

struct ResultRow {
  Algorithm algo = Algorithm::A;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  double norm_sim_err = 0.0;  ///< NaN unless status is "ok"
  std::string status;         ///< "ok", "infeasible", "solver-failure", "simulation-failure", "error"
  double wall_ms = 0.0;
  double sup_grid_err = 0.0;  ///< NaN unless status is "ok"
  /// Surrogate average minus the mean simulation error on the training data
  /// (algorithm A only, NaN otherwise).
  double bound_gap = 0.0;
  bool probe_passed = false;   ///< stability_probe on [-2, 2] x [-1, 1]
  double probe_rate = 0.0;
};

/// Runs every realization x horizon x algorithm; per-row failures are
/// recorded and the run continues. Rows are ordered by realization, then
/// horizon, then algorithm. `progress` is called after each finished row.
std::vector<ResultRow> run_comparison(const BenchmarkSpec& spec,
                                      const std::function<void(const ResultRow&)>& progress = {});

struct SummaryRow {
  Algorithm algo = Algorithm::A;
  std::size_t horizon = 0;
  std::size_t count = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  std::size_t failures = 0;
  std::size_t above_10 = 0;  ///< errors greater than 10 (1000 percent)
};

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Header algo,horizon,seed,norm_sim_err,status,wall_ms.
std::string results_to_csv(const std::vector<ResultRow>& rows);
/// Header algo,horizon,count,median,q1,q3,failures,above_10.
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stableid
