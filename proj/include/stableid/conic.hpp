#pragma once

// Solver-agnostic conic programs:
//
//   minimize    sum c_e v_e + c0
//   subject to  sum_e a_ke v_e = b_k              (one row per equality)
//               V_k - shift_k I  PSD               (PSD blocks)
//               v_0 >= |v_1..|                     (second-order cone blocks)
//               |v_B| <= sqrt(kappa)               (optional norm ball on one block)
//
// Variables live in named blocks. Matrix blocks are symmetric and a term
// (i, j) with i <= j addresses the single scalar V_ij = V_ji.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace stableid {

enum class BlockKind { Free, Symmetric, Psd, Soc };

std::string_view to_string(BlockKind kind);
BlockKind parse_block_kind(std::string_view text);

struct Block {
  std::string name;
  BlockKind kind = BlockKind::Free;
  std::size_t dim = 0;
  double shift = 0.0;  ///< PSD blocks only: V - shift I must be PSD
  bool is_matrix() const noexcept { return kind == BlockKind::Symmetric || kind == BlockKind::Psd; }
  /// Number of scalar unknowns (upper triangle for matrix blocks).
  std::size_t scalar_count() const noexcept { return is_matrix() ? dim * (dim + 1) / 2 : dim; }
};

struct Term {
  std::size_t block = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double coef = 0.0;
};

struct LinearRow {
  std::vector<Term> terms;
  double rhs = 0.0;
  std::string label;
};

/// Euclidean (vector blocks) or Frobenius (matrix blocks) norm bound |v| <= sqrt(radius_sq).
struct NormBall {
  std::size_t block = 0;
  double radius_sq = 0.0;
};

class ConicProgram {
 public:
  std::size_t add_block(std::string name, BlockKind kind, std::size_t dim, double shift = 0.0);
  std::optional<std::size_t> find_block(std::string_view name) const;
  std::size_t block_index(std::string_view name) const;  ///< throws std::out_of_range
  const Block& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

  /// Validates and canonicalizes (i <= j, duplicate entries merged, zeros dropped).
  std::size_t add_row(LinearRow row);
  const std::vector<LinearRow>& rows() const noexcept { return rows_; }

  void add_objective(const Term& t);
  void add_objective_constant(double c) { objective_constant_ += c; }
  const std::vector<Term>& objective() const noexcept { return objective_; }
  double objective_constant() const noexcept { return objective_constant_; }

  void set_norm_ball(NormBall ball);
  const std::optional<NormBall>& norm_ball() const noexcept { return ball_; }

  /// Free-form annotations (variable -> symbol map, configuration, ...).
  std::map<std::string, std::string> metadata;

  /// Value of a term list at the given block values.
  double evaluate(const std::vector<Term>& terms, const std::vector<Eigen::MatrixXd>& values) const;

  /// Zero-valued containers shaped like the blocks (dim x 1 or dim x dim).
  std::vector<Eigen::MatrixXd> zero_values() const;

 private:
  Term canonical(Term t) const;

  std::vector<Block> blocks_;
  std::vector<LinearRow> rows_;
  std::vector<Term> objective_;
  double objective_constant_ = 0.0;
  std::optional<NormBall> ball_;
};

/// Line-oriented text form:
///   conic-program v1
///   block <name> <kind> <dim> <shift>
///   eq <rhs> <n> (<block> <i> <j> <coef>)*n [# label]
///   obj <constant> <n> (<block> <i> <j> <coef>)*n
///   ball <block> <radius_sq>
///   meta <key> <value>
///   end
std::string program_to_text(const ConicProgram& cp);
ConicProgram parse_program(const std::string& text);

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };
std::string_view to_string(SolveStatus status);
SolveStatus parse_status(std::string_view text);

struct VerifyTolerances {
  double equality = 1e-7;  ///< per-row |a_k v - b_k| / max(1, |b_k|)
  double psd = 1e-8;       ///< min eigenvalue of V - shift I
  double cone = 1e-8;      ///< second-order cone and norm-ball margins
  double gap = 1e-7;       ///< |primal - dual| / (1 + |primal| + |dual|)
  double dual = 1e-6;      ///< dual cone / free-column violation relative to 1 + max|c|
};

struct ResidualReport {
  double max_equality_residual = 0.0;
  std::size_t worst_row = 0;
  std::map<std::string, double> psd_min_eigenvalue;  ///< per PSD block, of V - shift I
  double min_cone_margin = 0.0;                      ///< min over SOC blocks of v_0 - |v_1..|
  double ball_margin = 0.0;                          ///< sqrt(kappa) - |v_B| (0 when absent)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  bool has_dual = false;
  double dual_infeasibility = 0.0;  ///< worst dual cone / free-variable violation
  bool within_tolerance = false;
  std::string summary() const;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  /// One entry per block: dim x 1 for vector blocks, full symmetric dim x dim for matrices.
  std::vector<Eigen::MatrixXd> values;
  /// Multipliers of the equality rows followed by those of the norm-ball
  /// rows added when lowering (see lowered_row_count). May be empty.
  Eigen::VectorXd dual;
  double objective = 0.0;
  int iterations = 0;
  std::string backend;
  std::string message;

  const Eigen::MatrixXd& value(const ConicProgram& cp, std::string_view name) const {
    return values.at(cp.block_index(name));
  }
};

/// Number of equality rows after the norm ball is rewritten as a cone block.
std::size_t lowered_row_count(const ConicProgram& cp);

/// Recomputes every residual from the program data and the solution values;
/// backend-reported numbers are not consulted. Throws std::invalid_argument
/// when a block value is missing or misshaped.
ResidualReport verify(const ConicProgram& cp, const Solution& sol, const VerifyTolerances& tol = {});

std::string solution_to_text(const Solution& sol);
Solution parse_solution(const std::string& text);

struct SolverOptions {
  double tol = 1e-9;  ///< relative primal/dual infeasibility and gap targets
  /// When the method breaks down, the best iterate is returned as optimal if
  /// its worst relative measure is at most this; verification still applies.
  double accept_tol = 1e-8;
  int max_iter = 150;
  bool verbose = false;
};

/// Primal-dual interior-point backend (Nesterov-Todd scaling for PSD blocks and
/// second-order cones, Mehrotra predictor-corrector).
/// Free variables are eliminated by a pivoted QR of their columns first.
Solution solve(const ConicProgram& cp, const SolverOptions& opts = {});

}  // namespace stableid
