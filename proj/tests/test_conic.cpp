#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "stableid/conic.hpp"
#include "stableid/errors.hpp"

using namespace stableid;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = g(gen);
  return 0.5 * (a + a.transpose());
}

// trace(C X) as objective terms over a matrix block.
void add_trace_objective(ConicProgram& cp, std::size_t block, const Eigen::MatrixXd& c) {
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      cp.add_objective(Term{block, static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                            i == j ? c(i, i) : 2.0 * c(i, j)});
}

void require_verified(const ConicProgram& cp, const Solution& sol) {
  const ResidualReport rep = verify(cp, sol);
  INFO(rep.summary());
  CHECK(rep.within_tolerance);
}

}  // namespace

TEST_CASE("scalar PSD block: min x s.t. x >= 1") {
  ConicProgram cp;
  const auto x = cp.add_block("x", BlockKind::Psd, 1, 1.0);
  cp.add_objective(Term{x, 0, 0, 1.0});
  const Solution sol = solve(cp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  require_verified(cp, sol);
}

TEST_CASE("min trace X s.t. X >= I") {
  ConicProgram cp;
  const auto x = cp.add_block("X", BlockKind::Psd, 2, 1.0);
  add_trace_objective(cp, x, Eigen::Matrix2d::Identity());
  const Solution sol = solve(cp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
  require_verified(cp, sol);
}

TEST_CASE("smallest eigenvalue as an SDP") {
  std::mt19937_64 gen(31);
  for (Eigen::Index n = 2; n <= 7; ++n) {
    const Eigen::MatrixXd c = random_symmetric(gen, n);
    ConicProgram cp;
    const auto x = cp.add_block("X", BlockKind::Psd, static_cast<std::size_t>(n));
    add_trace_objective(cp, x, c);
    LinearRow tr;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) tr.terms.push_back(Term{x, i, i, 1.0});
    tr.rhs = 1.0;
    cp.add_row(tr);
    const Solution sol = solve(cp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues()(0);
    CHECK(std::abs(sol.objective - lmin) <= 1e-7);
    require_verified(cp, sol);
  }
}

TEST_CASE("linear objective over a Euclidean ball") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd c(4);
    for (auto& v : c) v = g(gen);
    ConicProgram cp;
    const auto x = cp.add_block("x", BlockKind::Free, 4);
    for (std::size_t i = 0; i < 4; ++i) cp.add_objective(Term{x, i, 0, c(static_cast<Eigen::Index>(i))});
    cp.set_norm_ball(NormBall{x, 2.25});
    const Solution sol = solve(cp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-1.5 * c.norm()).epsilon(1e-7));
    CHECK((sol.values[x].col(0) + 1.5 * c / c.norm()).norm() <= 1e-5);
    require_verified(cp, sol);
  }
}

TEST_CASE("least squares through a rotated cone epigraph") {
  // min t s.t. |A x - b|^2 <= t written as |(2(Ax - b), t - 1)| <= t + 1.
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(6, 3);
  Eigen::VectorXd b(6);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = g(gen);
  for (auto& v : b) v = g(gen);
  ConicProgram cp;
  const auto x = cp.add_block("x", BlockKind::Free, 3);
  const auto t = cp.add_block("t", BlockKind::Free, 1);
  const auto u = cp.add_block("u", BlockKind::Soc, 8);
  cp.add_row({{{u, 0, 0, 1.0}, {t, 0, 0, -1.0}}, 1.0, "u0"});
  cp.add_row({{{u, 1, 0, 1.0}, {t, 0, 0, -1.0}}, -1.0, "u1"});
  for (std::size_t r = 0; r < 6; ++r) {
    LinearRow row;
    row.terms.push_back(Term{u, 2 + r, 0, 1.0});
    for (std::size_t c = 0; c < 3; ++c)
      row.terms.push_back(Term{x, c, 0, -2.0 * a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))});
    row.rhs = -2.0 * b(static_cast<Eigen::Index>(r));
    cp.add_row(row);
  }
  cp.add_objective(Term{t, 0, 0, 1.0});
  const Solution sol = solve(cp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const Eigen::VectorXd xs = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  CHECK(sol.objective == doctest::Approx((a * xs - b).squaredNorm()).epsilon(1e-7));
  CHECK((sol.values[x].col(0) - xs).norm() <= 1e-4);
  require_verified(cp, sol);
}

TEST_CASE("Frobenius ball on a PSD block") {
  // max trace(C X) over X PSD, |X|_F <= 1: the top eigenvector of C.
  Eigen::Matrix3d c;
  c << 2, 1, 0, 1, 1, 0, 0, 0, -1;
  ConicProgram cp;
  const auto x = cp.add_block("X", BlockKind::Psd, 3);
  add_trace_objective(cp, x, -c);
  cp.set_norm_ball(NormBall{x, 1.0});
  const Solution sol = solve(cp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(c).eigenvalues();
  // the optimum spreads mass over positive eigenvalues: value -|lambda_+|
  const double expected = -std::sqrt(ev(1) * ev(1) + ev(2) * ev(2));
  CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-7));
  require_verified(cp, sol);
}

TEST_CASE("infeasible and unbounded programs") {
  SUBCASE("negative diagonal") {
    ConicProgram cp;
    const auto x = cp.add_block("X", BlockKind::Psd, 2);
    cp.add_row({{{x, 0, 0, 1.0}}, -1.0, "neg"});
    CHECK(solve(cp).status == SolveStatus::Infeasible);
  }
  SUBCASE("inconsistent equalities") {
    ConicProgram cp;
    const auto x = cp.add_block("x", BlockKind::Free, 1);
    const auto p = cp.add_block("P", BlockKind::Psd, 1);
    cp.add_row({{{x, 0, 0, 1.0}, {p, 0, 0, 1.0}}, 1.0, "a"});
    cp.add_row({{{x, 0, 0, 2.0}, {p, 0, 0, 2.0}}, 3.0, "b"});
    CHECK(solve(cp).status == SolveStatus::Infeasible);
  }
  SUBCASE("unconstrained free variable") {
    ConicProgram cp;
    const auto x = cp.add_block("x", BlockKind::Free, 2);
    const auto p = cp.add_block("P", BlockKind::Psd, 1);
    cp.add_row({{{x, 0, 0, 1.0}, {p, 0, 0, 1.0}}, 1.0, "a"});
    cp.add_objective(Term{x, 1, 0, 1.0});
    CHECK(solve(cp).status == SolveStatus::Unbounded);
  }
  SUBCASE("unbounded cone ray") {
    ConicProgram cp;
    const auto x = cp.add_block("X", BlockKind::Psd, 2);
    cp.add_row({{{x, 0, 1, 1.0}}, 0.0, "offdiag"});
    cp.add_objective(Term{x, 0, 0, -1.0});
    CHECK(solve(cp).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("verify flags perturbations") {
  ConicProgram cp;
  const auto s = cp.add_block("S", BlockKind::Psd, 2);
  cp.add_row({{{s, 0, 0, 1.0}}, 1.0, "s00"});
  cp.add_row({{{s, 0, 1, 1.0}}, 0.5, "s01"});
  cp.add_row({{{s, 1, 1, 1.0}}, 1.0, "s11"});
  Solution sol;
  sol.values = cp.zero_values();
  sol.values[s] << 1, 0.5, 0.5, 1;
  ResidualReport rep = verify(cp, sol);
  CHECK(rep.max_equality_residual <= 1e-9);
  CHECK(rep.psd_min_eigenvalue.at("S") == doctest::Approx(0.5));
  CHECK_FALSE(rep.has_dual);

  sol.values[s](0, 1) = sol.values[s](1, 0) = 0.501;
  rep = verify(cp, sol);
  CHECK(rep.max_equality_residual >= 1e-4);
  CHECK(rep.worst_row == 1);
  CHECK_FALSE(rep.within_tolerance);

  sol.values[s] << 1, 2, 2, 1;
  CHECK(verify(cp, sol).psd_min_eigenvalue.at("S") == doctest::Approx(-1.0));

  sol.values.pop_back();
  CHECK_THROWS_AS(verify(cp, sol), std::invalid_argument);
}

TEST_CASE("program and solution text round trip") {
  ConicProgram cp;
  const auto th = cp.add_block("theta", BlockKind::Free, 3);
  const auto r = cp.add_block("R", BlockKind::Symmetric, 2);
  const auto p = cp.add_block("P", BlockKind::Psd, 2, 0.01);
  const auto q = cp.add_block("q", BlockKind::Soc, 3);
  cp.add_row({{{th, 0, 0, 0.1}, {r, 1, 0, -1.0 / 3.0}, {p, 1, 1, 2.0}}, 0.7, "monomial x^2 w"});
  cp.add_row({{{q, 2, 0, 1e-300}}, -4.0, ""});
  cp.add_objective(Term{r, 0, 1, M_PI});
  cp.add_objective_constant(0.25);
  cp.set_norm_ball(NormBall{r, 0.01});
  cp.metadata["theta0"] = "e:x";
  const std::string text = program_to_text(cp);
  const ConicProgram back = parse_program(text);
  CHECK(program_to_text(back) == text);
  REQUIRE(back.rows().size() == 2);
  CHECK(back.rows()[0].label == "monomial x^2 w");
  CHECK(back.rows()[0].terms[1].coef == -1.0 / 3.0);
  CHECK(back.block(p).shift == 0.01);
  CHECK(back.norm_ball()->radius_sq == 0.01);

  CHECK_THROWS_AS(parse_program(text.substr(0, text.size() / 2)), ParseError);
  CHECK_THROWS_AS(parse_program("conic-program v1\nblock x free 0 0\nend\n"), ParseError);

  const Solution sol = solve(cp);
  const Solution sback = parse_solution(solution_to_text(sol));
  CHECK(sback.status == sol.status);
  REQUIRE(sback.values.size() == sol.values.size());
  for (std::size_t k = 0; k < sol.values.size(); ++k) CHECK(sback.values[k] == sol.values[k]);
  CHECK(sback.dual == sol.dual);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 gen(77);
  const Eigen::MatrixXd c = random_symmetric(gen, 5);
  ConicProgram cp;
  const auto x = cp.add_block("X", BlockKind::Psd, 5);
  add_trace_objective(cp, x, c);
  cp.add_row({{{x, 0, 0, 1.0}, {x, 4, 4, 1.0}}, 1.0, "a"});
  cp.add_row({{{x, 1, 1, 1.0}, {x, 2, 3, 1.0}}, 2.0, "b"});
  cp.set_norm_ball(NormBall{x, 50.0});
  const Solution a = solve(cp), b = solve(cp);
  REQUIRE(a.status == SolveStatus::Optimal);
  CHECK(a.objective == b.objective);
}
