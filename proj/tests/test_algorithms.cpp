#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "stableid/algorithms.hpp"
#include "stableid/errors.hpp"
#include "stableid/rng.hpp"
#include "stableid/sos.hpp"

using namespace stableid;

namespace {

Eigen::MatrixXd uniform_signal(std::uint64_t seed, std::string_view stream, std::size_t rows, std::size_t cols) {
  CounterRng rng(seed, stream);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-1.0, 1.0);
  return w;
}

// x(t) = A x(t-1) + B w(t) from x(0) = 0, written directly.
Eigen::MatrixXd linear_response(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& w) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(w.rows(), A.rows());
  for (Eigen::Index t = 1; t < w.rows(); ++t)
    x.row(t) = (A * x.row(t - 1).transpose() + B * w.row(t).transpose()).transpose();
  return x;
}

double relative_validation_error(const ProjectiveModel& m, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd w = uniform_signal(99, "validation", 201, static_cast<std::size_t>(B.cols()));
  const Eigen::MatrixXd truth = linear_response(A, B, w);
  const Eigen::MatrixXd xh = simulate(m, Eigen::VectorXd::Zero(A.rows()), w);
  return (truth - xh).squaredNorm() / truth.squaredNorm();
}

DataSet noiseless_linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t T, std::uint64_t seed) {
  const Eigen::MatrixXd w = uniform_signal(seed, "input", T + 1, static_cast<std::size_t>(B.cols()));
  return DataSet(w, {linear_response(A, B, w)});
}

}  // namespace

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : {Algorithm::A, Algorithm::LS, Algorithm::MLS}) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK(parse_algorithm("MLS") == Algorithm::MLS);
  CHECK_THROWS_AS(parse_algorithm("nls"), std::invalid_argument);
}

TEST_CASE("configuration is validated") {
  IdentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.kappa = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.moment_regularization = -1e-3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("replicated copies every experiment") {
  const Eigen::MatrixXd w = uniform_signal(1, "w", 6, 1);
  const DataSet ds(w, {w, 2.0 * w});
  const DataSet r = replicated(ds, 3);
  REQUIRE(r.experiments() == 6);
  CHECK(r.state(4) == ds.state(0));
  CHECK(r.state(5) == ds.state(1));
  CHECK_THROWS_AS(replicated(ds, 0), std::invalid_argument);
}

TEST_CASE("noiseless scalar linear system is recovered by every estimator") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, 0.7);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const DataSet ds = replicated(noiseless_linear(A, B, 300, 3), 2);
  const Dictionary dict = linear_dictionary(1, 1);
  for (Algorithm algo : {Algorithm::A, Algorithm::LS, Algorithm::MLS}) {
    CAPTURE(to_string(algo));
    const IdentResult res = identify(algo, ds, dict);
    CHECK(res.status == SolveStatus::Optimal);
    CHECK(res.report.within_tolerance);
    CHECK(relative_validation_error(res.model, A, B) <= 1e-3);
    if (algo == Algorithm::A) {
      CHECK(res.objective <= 1e-6);
      REQUIRE(res.surrogate.has_value());
    }
  }
}

TEST_CASE("noiseless two-state linear system is recovered by algorithm A") {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0.5, 0.3, -0.2, 0.6;
  B << 1.0, 0.5;
  const DataSet ds = replicated(noiseless_linear(A, B, 300, 5), 2);
  const IdentResult res = algorithm_A(ds, linear_dictionary(2, 1));
  CHECK(res.status == SolveStatus::Optimal);
  CHECK(res.objective <= 1e-6);
  CHECK(relative_validation_error(res.model, A, B) <= 1e-3);
  CHECK(res.model.provenance.algorithm == "A");
  CHECK(res.model.provenance.dataset_hash == ds.content_hash());
}

TEST_CASE("identical experiments make modified least squares coincide with least squares") {
  const Eigen::MatrixXd w = uniform_signal(7, "w", 121, 1);
  Eigen::MatrixXd x = linear_response(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0), w);
  CounterRng rng(7, "noise");
  for (Eigen::Index t = 0; t < x.rows(); ++t) x(t, 0) += 0.1 * rng.normal();
  const DataSet ds(w, {x, x});
  const Dictionary dict = linear_dictionary(1, 1);

  const MonomialBasis aleph = mls_aleph(dict);
  const Eigen::MatrixXd linearized = moment_matrix(ds, aleph).matrix;
  const Eigen::MatrixXd gram = data_gram_matrix(ds, aleph).matrix;
  CHECK((linearized - gram).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + gram.cwiseAbs().maxCoeff()));

  const IdentResult ls = least_squares(ds, dict);
  const IdentResult mls = modified_least_squares(ds, dict);
  CHECK(mls.objective == doctest::Approx(ls.objective).epsilon(1e-6));
  CHECK((mls.model.theta() - ls.model.theta()).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("surrogate average bounds the simulation error on the data") {
  const Eigen::MatrixXd w = uniform_signal(11, "w", 151, 1);
  const Eigen::MatrixXd x0 =
      linear_response(Eigen::MatrixXd::Constant(1, 1, 0.6), Eigen::MatrixXd::Constant(1, 1, 1.0), w);
  std::vector<Eigen::MatrixXd> states;
  for (int i = 0; i < 3; ++i) {
    CounterRng rng(11, "noise/" + std::to_string(i));
    Eigen::MatrixXd x = x0;
    for (Eigen::Index t = 0; t < x.rows(); ++t) x(t, 0) += 0.05 * rng.normal();
    states.push_back(x);
  }
  const DataSet ds(w, states);
  IdentConfig cfg;
  cfg.kappa = 100.0;
  const IdentResult res = algorithm_A(ds, linear_dictionary(1, 1), cfg);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(std::isfinite(res.jhat));
  CHECK(res.jhat >= mean_sim_error(res.model, ds) - 1e-9);
  REQUIRE(res.surrogate.has_value());
  CHECK(res.surrogate->R.squaredNorm() <= 100.0 * (1.0 + 1e-6));
}

TEST_CASE("identified model passes the stability probe") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, 0.9);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const DataSet ds = replicated(noiseless_linear(A, B, 200, 13), 2);
  const IdentResult res = algorithm_A(ds, linear_dictionary(1, 1));
  ProbeOptions opts;
  opts.trials = 5;
  opts.horizon = 100;
  const ProbeReport rep = stability_probe(res.model, opts);
  CHECK(rep.passed());
  CHECK(rep.max_rate < 1.0);
}

TEST_CASE("empty model set is reported as infeasible") {
  // e = theta x^2 is not strongly monotone for any theta.
  const Polynomial x = Polynomial::variable(1, 0);
  const Dictionary dict(1, 1, {{x * x}}, {{}});
  const DataSet ds = replicated(noiseless_linear(Eigen::MatrixXd::Constant(1, 1, 0.5),
                                                 Eigen::MatrixXd::Constant(1, 1, 1.0), 50, 2),
                                4);
  for (Algorithm algo : {Algorithm::A, Algorithm::LS, Algorithm::MLS}) {
    CAPTURE(to_string(algo));
    try {
      identify(algo, ds, dict);
      FAIL("expected an identification error");
    } catch (const IdentificationError& e) {
      CHECK(std::string(e.what()).find("constraint set is empty") != std::string::npos);
    }
  }
}

TEST_CASE("data must match the dictionary") {
  const DataSet ds = noiseless_linear(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0), 20, 1);
  CHECK_THROWS_AS(least_squares(ds, linear_dictionary(2, 1)), DimensionError);
}

TEST_CASE("persistence diagnostic") {
  const std::size_t T = 40;
  SUBCASE("constant signals are not exciting") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(T + 1, 1, 0.5);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(T + 1, 1, 0.5);
    const MonomialBasis aleph({VectorDegree::zero(3), VectorDegree::unit(3, 0), VectorDegree::unit(3, 1),
                               VectorDegree::unit(3, 2)});
    const auto pts = persistence_diagnostic(x, w, aleph, {10, 40});
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) CHECK(std::abs(p.min_eigenvalue) <= 1e-12);
  }
  SUBCASE("the constant monomial alone gives one") {
    const Eigen::MatrixXd x = uniform_signal(1, "x", T + 1, 1);
    const Eigen::MatrixXd w = uniform_signal(1, "w", T + 1, 1);
    const MonomialBasis aleph({VectorDegree::zero(3)});
    const auto pts = persistence_diagnostic(x, w, aleph, {5, 20});
    for (const auto& p : pts) {
      CHECK(p.min_eigenvalue == doctest::Approx(1.0));
      CHECK(p.max_eigenvalue == doctest::Approx(1.0));
    }
  }
  SUBCASE("random signals excite linear monomials") {
    const Eigen::MatrixXd x = uniform_signal(2, "x", T + 1, 1);
    const Eigen::MatrixXd w = uniform_signal(2, "w", T + 1, 1);
    const MonomialBasis aleph({VectorDegree::unit(3, 0), VectorDegree::unit(3, 1), VectorDegree::unit(3, 2)});
    const auto pts = persistence_diagnostic(x, w, aleph, {T});
    CHECK(pts[0].min_eigenvalue > 1e-3);
  }
  SUBCASE("horizons outside the sequence are rejected") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(T + 1, 1);
    const MonomialBasis aleph({VectorDegree::zero(3)});
    CHECK_THROWS_AS(persistence_diagnostic(x, x, aleph, {T + 1}), std::invalid_argument);
  }
}
