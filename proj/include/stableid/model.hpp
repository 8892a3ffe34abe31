#pragma once

// Projective models e_theta(x(t)) = f_theta(x(t-1), w(t)), simulated by
// solving the implicit equation for x(t) with damped Newton steps.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stableid/dataset.hpp"
#include "stableid/dictionary.hpp"
#include "stableid/poly.hpp"

namespace stableid {

struct Provenance {
  std::string algorithm;
  std::string dataset_hash;
  std::uint64_t seed = 0;
  std::string backend;
  /// Free-form JSON text describing the configuration that produced the model.
  std::string config;
};

class ProjectiveModel {
 public:
  ProjectiveModel(Dictionary dict, Eigen::VectorXd theta, double delta = 0.0);

  const Dictionary& dictionary() const noexcept { return dict_; }
  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  /// Monotonicity margin certified when the model was produced (0 = none).
  double delta() const noexcept { return delta_; }
  std::size_t n_x() const noexcept { return dict_.n_x(); }
  std::size_t n_w() const noexcept { return dict_.n_w(); }

  Eigen::VectorXd e(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd e_jacobian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd f(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;

  const std::vector<Polynomial>& e_components() const noexcept { return e_; }
  const std::vector<Polynomial>& f_components() const noexcept { return f_; }

  Provenance provenance;

 private:
  Dictionary dict_;
  Eigen::VectorXd theta_;
  double delta_;
  std::vector<Polynomial> e_;
  std::vector<Polynomial> f_;
  std::vector<std::vector<Polynomial>> de_;  // de_[a][b] = d e_a / d x_b
};

struct NewtonOptions {
  double tol = 1e-10;  ///< relative to 1 + |target|
  int max_iter = 100;
};

/// Solves e_theta(x) = target from `guess`; halves the Newton step until the
/// residual norm decreases. Throws NewtonFailure carrying the final residual.
Eigen::VectorXd solve_e(const ProjectiveModel& m, const Eigen::VectorXd& target,
                        const Eigen::VectorXd& guess, const NewtonOptions& opts = {});

/// a_theta(x_prev, w) with x_prev as the initial guess.
Eigen::VectorXd step(const ProjectiveModel& m, const Eigen::VectorXd& x_prev, const Eigen::VectorXd& w,
                     const NewtonOptions& opts = {});

/// One step of a state-space map x(t) = a(x(t-1), w(t)).
using Stepper = std::function<Eigen::VectorXd(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& w)>;

Stepper make_stepper(const ProjectiveModel& m, const NewtonOptions& opts = {});

/// Rows t = 0..T with x(0) = x0 and x(t) = a(x(t-1), w(t)); row 0 of w is
/// not read. Step failures are rethrown as SimulationFailure(t, residual).
Eigen::MatrixXd simulate(const Stepper& a, const Eigen::VectorXd& x0, const Eigen::MatrixXd& w);
Eigen::MatrixXd simulate(const ProjectiveModel& m, const Eigen::VectorXd& x0, const Eigen::MatrixXd& w);

/// (1/T) sum_{t=0..T-1} |C (xtilde(t) - x(t))|^2 with x simulated from x0
/// over the rows of wtilde (T + 1 rows).
double sim_error(const Stepper& a, const Eigen::VectorXd& x0, const Eigen::MatrixXd& xtilde,
                 const Eigen::MatrixXd& wtilde, const Eigen::MatrixXd& c);
double sim_error(const ProjectiveModel& m, const Eigen::VectorXd& x0, const Eigen::MatrixXd& xtilde,
                 const Eigen::MatrixXd& wtilde, const Eigen::MatrixXd& c);

/// Mean of sim_error over the experiments of a data set, each started from x_i(0).
double mean_sim_error(const ProjectiveModel& m, const DataSet& ds);

/// r(z) = sum_{j1, j2} R(j1, j2) z^(alpha_j1 + alpha_j2).
struct SurrogatePair {
  Polynomial r;
  Eigen::MatrixXd R;
  MonomialBasis aleph;
};

SurrogatePair surrogate_from_gram(const Eigen::MatrixXd& R, const MonomialBasis& aleph);

/// (1/(N T)) sum_i sum_{t=1..T} r(z_i(t)).
double jhat_r(const Polynomial& r, const DataSet& ds);
inline double jhat_r(const SurrogatePair& sp, const DataSet& ds) { return jhat_r(sp.r, ds); }

struct ProbeOptions {
  std::size_t trials = 20;
  std::size_t horizon = 200;
  std::uint64_t seed = 0;
  double state_range = 1.0;  ///< initial states uniform in [-range, range]
  double input_range = 1.0;  ///< inputs uniform in [-range, range]
};

struct ProbeReport {
  std::size_t trials = 0;
  /// Largest sum_{t >= T/2} |x(t) - xhat(t)|^2 over trials.
  double max_tail_energy = 0.0;
  /// Largest fitted per-step contraction factor of |x(t) - xhat(t)|.
  double max_rate = 0.0;
  std::vector<double> rates;
  std::size_t simulation_failures = 0;
  std::size_t growing = 0;  ///< trials whose tail energy exceeds their head energy
  bool passed() const noexcept { return simulation_failures == 0 && growing == 0 && max_rate < 1.0; }
};

/// Simulates pairs of responses to a shared random input from distinct
/// random initial states and summarizes how their difference evolves.
ProbeReport stability_probe(const ProjectiveModel& m, const ProbeOptions& opts = {});

/// Fitted per-step contraction factor of a difference sequence |d(t)|^2
/// (log-linear least squares over samples above the rounding floor).
double fitted_rate(const std::vector<double>& energy);

/// Optional surrogate is stored alongside the model in the same file.
void save_model(const ProjectiveModel& m, const std::filesystem::path& path,
                const std::optional<SurrogatePair>& surrogate = std::nullopt);
std::string model_to_string(const ProjectiveModel& m,
                            const std::optional<SurrogatePair>& surrogate = std::nullopt);

struct LoadedModel {
  ProjectiveModel model;
  std::optional<SurrogatePair> surrogate;
};
LoadedModel load_model(const std::filesystem::path& path);
LoadedModel parse_model(const std::string& text);

/// CSV with header "t,x1,...": one row per time index.
void write_trajectory_csv(const Eigen::MatrixXd& x, const std::filesystem::path& path);

/// Numeric CSV; a first line that does not parse as numbers is treated as a
/// header and skipped. All rows must have the same number of columns.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);

}  // namespace stableid
