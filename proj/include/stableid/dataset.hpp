#pragma once

// Repeated-experiment data sets: one input sequence w(0..T) shared by N
// measured state trajectories x_i(0..T). Dynamics follow the convention
// x(t) = a(x(t-1), w(t)); data recorded as xbar(t+1) = f(xbar(t), u(t)) maps
// to w(t) := u(t-1).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stableid {

class DataSet {
 public:
  DataSet() = default;
  /// `input` is (T+1) x n_w, each state is (T+1) x n_x. `output_map` (C)
  /// defaults to the n_x x n_x identity.
  DataSet(Eigen::MatrixXd input, std::vector<Eigen::MatrixXd> states,
          std::optional<Eigen::MatrixXd> output_map = std::nullopt);

  std::size_t n_x() const noexcept { return n_x_; }
  std::size_t n_w() const noexcept { return n_w_; }
  std::size_t n_z() const noexcept { return 2 * n_x_ + n_w_; }
  std::size_t experiments() const noexcept { return states_.size(); }
  /// Signal length T (sequences hold T+1 samples).
  std::size_t horizon() const noexcept { return horizon_; }

  const Eigen::MatrixXd& input() const noexcept { return input_; }
  const std::vector<Eigen::MatrixXd>& states() const noexcept { return states_; }
  const Eigen::MatrixXd& state(std::size_t i) const { return states_.at(i); }
  const Eigen::MatrixXd& output_map() const noexcept { return c_; }

  /// First T'+1 samples of every sequence.
  DataSet truncated(std::size_t horizon) const;

  /// Content hash (FNV-1a over dimensions and raw doubles), hex encoded.
  std::string content_hash() const;

  friend bool operator==(const DataSet& a, const DataSet& b);

 private:
  Eigen::MatrixXd input_;
  std::vector<Eigen::MatrixXd> states_;
  Eigen::MatrixXd c_;
  std::size_t n_x_ = 0;
  std::size_t n_w_ = 0;
  std::size_t horizon_ = 0;
};

/// z_i(t) = [x_i(t); x_i(t-1); w(t)] for experiment i (0-based) and 1 <= t <= T.
Eigen::VectorXd embed(const DataSet& ds, std::size_t experiment, std::size_t t);

/// Same stacking for arbitrary trajectories.
Eigen::VectorXd embed_point(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, std::size_t t);

/// SISO record of N periods of length D turned into an N-experiment data set
/// with n_x = n_w = window:
///   w(t)       = [u(t+n); ...; u(t+1)]
///   x_{i+1}(t) = [y(t+n+iD); ...; y(t+1+iD)]
/// for t = 0..D-n and i = 0..N-1, N = floor(len / D). Sample indices past
/// the end of the record wrap around (the record is one period-aligned cycle).
/// C defaults to [1 0 ... 0].
DataSet siso_embed(std::span<const double> u, std::span<const double> y, std::size_t window,
                   std::size_t period);

/// Structured JSON document: n_x, n_w, N, T, "w" ((T+1) rows of n_w),
/// "x" (N arrays of (T+1) rows of n_x), optional "C".
DataSet load_dataset(const std::filesystem::path& path);
void save_dataset(const DataSet& ds, const std::filesystem::path& path);

DataSet parse_dataset(const std::string& text);
std::string dataset_to_string(const DataSet& ds);

/// SISO CSV with header "t,u,y". Returns (u, y) columns in row order.
struct SisoRecord {
  std::vector<double> u;
  std::vector<double> y;
};
SisoRecord load_siso_csv(const std::filesystem::path& path);
SisoRecord parse_siso_csv(const std::string& text);

}  // namespace stableid
