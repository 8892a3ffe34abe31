#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "stableid/dictionary.hpp"
#include "stableid/harness.hpp"
#include "stableid/rng.hpp"

using namespace stableid;

TEST_CASE("true system inverse and step") {
  for (double rhs : {-50.0, -3.0, -0.2, 0.0, 0.7, 4.0, 123.0}) {
    const double x = true_e_inverse(rhs);
    CHECK(std::abs(x + std::pow(x, 5) / 5.0 - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
  }
  // plain bisection as an independent oracle
  const double xp = 0.8, w = -0.3;
  const double rhs = xp * xp * xp / 3.0 + 5.0 * w;
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid + std::pow(mid, 5) / 5.0 < rhs ? lo : hi) = mid;
  }
  CHECK(true_step(xp, w) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
  CHECK_THROWS_AS(true_e_inverse(std::nan("")), std::invalid_argument);
}

TEST_CASE("example data") {
  SUBCASE("zero noise reproduces the truth in every trial") {
    const ExampleData ex = gen_example_data(50, 3, 0.0, 4);
    REQUIRE(ex.data.experiments() == 3);
    CHECK(ex.data.horizon() == 50);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ex.data.state(i) == ex.truth);
    CHECK(ex.truth(0, 0) == 0.0);
    CHECK(ex.input(50, 0) == 0.0);
    for (Eigen::Index t = 1; t <= 50; ++t) {
      CHECK(ex.data.input()(t, 0) == ex.input(t - 1, 0));
      CHECK(ex.truth(t, 0) == doctest::Approx(true_step(ex.truth(t - 1, 0), ex.input(t - 1, 0))).epsilon(1e-14));
    }
  }
  SUBCASE("zero input keeps the system at rest") {
    const Eigen::MatrixXd x = simulate(true_stepper(), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(20, 1));
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("noise has the requested scale and is reproducible") {
    const ExampleData a = gen_example_data(400, 2, 0.3, 9);
    const ExampleData b = gen_example_data(400, 2, 0.3, 9);
    CHECK(a.data == b.data);
    const Eigen::MatrixXd e = a.data.state(0) - a.truth;
    const double sd = std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
    CHECK(sd == doctest::Approx(0.3).epsilon(0.15));
    CHECK(a.data.state(0) != a.data.state(1));
  }
  SUBCASE("truncation clips samples") {
    const ExampleData ex = gen_example_data(300, 1, 1.0, 5, 0.5);
    CHECK((ex.data.state(0) - ex.truth).cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
  }
  CHECK_THROWS_AS(gen_example_data(0, 1, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_example_data(10, 0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_example_data(10, 1, -0.1, 1), std::invalid_argument);
}

TEST_CASE("validation error") {
  SUBCASE("the exact model scores zero") {
    const ProjectiveModel m(benchmark_dictionary(), benchmark_theta(), 0.01);
    CHECK(validate(m, 3, 200) <= 1e-8);
    CHECK(sup_grid_error(make_stepper(m)) <= 1e-8);
  }
  SUBCASE("the zero model scores one") {
    const Stepper zero = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    CHECK(validate(zero, 3, 200) == doctest::Approx(1.0));
  }
  SUBCASE("matches a direct loop") {
    const Stepper half = [](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
      return Eigen::VectorXd::Constant(1, 0.5 * x(0) + w(0));
    };
    const std::size_t T = 120;
    CounterRng rng(8, "validation-input");
    std::vector<double> u(T + 1);
    for (double& v : u) v = rng.uniform(-1.0, 1.0);
    u[T] = 0.0;
    double xt = 0.0, xm = 0.0, num = 0.0, den = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      xt = true_step(xt, u[t - 1]);
      xm = 0.5 * xm + u[t - 1];
      num += (xt - xm) * (xt - xm);
      den += xt * xt;
    }
    CHECK(validate(half, 8, T) == doctest::Approx(num / den).epsilon(1e-12));
  }
}

TEST_CASE("grid error of a shifted model") {
  const Stepper shifted = [](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(1, true_step(x(0), w(0)) + 0.25);
  };
  CHECK(sup_grid_error(shifted) == doctest::Approx(0.25));
  CHECK_THROWS_AS(sup_grid_error(shifted, 1, 5), std::invalid_argument);
}

TEST_CASE("quantiles interpolate between order statistics") {
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({7.0}, 0.75) == doctest::Approx(7.0));
  CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("summaries count failures and large errors") {
  std::vector<ResultRow> rows;
  for (double e : {0.1, 0.2, 0.3, 20.0}) rows.push_back({Algorithm::LS, 100, 1, e, "ok", 1.0, 0.0});
  rows.push_back({Algorithm::LS, 100, 2, std::nan(""), "infeasible", 1.0, std::nan("")});
  rows.push_back({Algorithm::A, 100, 1, 0.05, "ok", 1.0, 0.0});
  const auto s = summarize(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].algo == Algorithm::A);
  CHECK(s[1].count == 5);
  CHECK(s[1].failures == 1);
  CHECK(s[1].above_10 == 1);
  CHECK(s[1].median == doctest::Approx(0.25));
  const std::string csv = results_to_csv(rows);
  CHECK(csv.rfind("algo,horizon,seed,norm_sim_err,status,wall_ms\n", 0) == 0);
  CHECK(csv.find("ls,100,2,nan,infeasible,1.0") != std::string::npos);
  CHECK(summary_to_csv(s).rfind("algo,horizon,count,median,q1,q3,failures,above_10\n", 0) == 0);
}

TEST_CASE("benchmark specification is validated") {
  BenchmarkSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.horizons = {200, 100};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.realizations = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  CHECK(spec.realization_seed(0) != spec.realization_seed(1));
}

TEST_CASE("comparison run") {
  BenchmarkSpec spec;
  spec.horizons = {80};
  spec.realizations = 1;
  spec.trials = 10;
  spec.threads = 1;
  std::size_t seen = 0;
  const auto rows = run_comparison(spec, [&](const ResultRow&) { ++seen; });
  REQUIRE(rows.size() == 3);
  CHECK(seen == 3);
  for (const ResultRow& r : rows) {
    CAPTURE(to_string(r.algo));
    CHECK(r.horizon == 80);
    CHECK(r.seed == spec.realization_seed(0));
    CHECK(r.status == "ok");
    CHECK(std::isfinite(r.norm_sim_err));
    CHECK(r.norm_sim_err < 1.0);
    CHECK(r.probe_passed);
    if (r.algo == Algorithm::A) CHECK(r.bound_gap >= -1e-6);
    else CHECK(std::isnan(r.bound_gap));
  }

  SUBCASE("rows are reproducible and independent of the thread count") {
    BenchmarkSpec quick = spec;
    quick.algorithms = {Algorithm::LS, Algorithm::MLS};
    quick.realizations = 3;
    quick.threads = 1;
    const auto a = run_comparison(quick);
    quick.threads = 3;
    const auto b = run_comparison(quick);
    REQUIRE(a.size() == 6);
    REQUIRE(b.size() == 6);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].algo == b[k].algo);
      CHECK(a[k].seed == b[k].seed);
      CHECK(a[k].norm_sim_err == b[k].norm_sim_err);
    }
  }
}
