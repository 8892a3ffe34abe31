#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "stableid/errors.hpp"
#include "stableid/model.hpp"
#include "stableid/moments.hpp"

using namespace stableid;

namespace {

// Scalar root of x + c5 x^5 + c3 x^3 + c1' x = target for increasing odd polynomials.
double bisect(const std::function<double(double)>& g, double target) {
  double lo = -1.0, hi = 1.0;
  while (g(lo) > target) lo *= 2;
  while (g(hi) < target) hi *= 2;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Linear model e(x) = x, f(x, w) = A x + B w in the linear dictionary.
ProjectiveModel linear_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto nx = static_cast<std::size_t>(a.rows());
  const auto nw = static_cast<std::size_t>(b.cols());
  std::vector<Polynomial> e, f;
  for (std::size_t r = 0; r < nx; ++r) {
    e.push_back(Polynomial::variable(nx, r));
    Polynomial fr(nx + nw);
    for (std::size_t c = 0; c < nx; ++c)
      fr.add_term(VectorDegree::unit(nx + nw, c), a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    for (std::size_t c = 0; c < nw; ++c)
      fr.add_term(VectorDegree::unit(nx + nw, nx + c),
                  b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    f.push_back(fr);
  }
  const Dictionary dict = linear_dictionary(nx, nw);
  return ProjectiveModel(dict, theta_for(dict, e, f), 0.01);
}

ProjectiveModel quintic_model(double c1, double c3, double c5) {
  const Dictionary dict = benchmark_dictionary();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dict.size()));
  theta(0) = c1;  // e: x
  theta(2) = c3;  // e: x^3
  theta(4) = c5;  // e: x^5
  theta(6) = 1.0;  // f: w
  return ProjectiveModel(dict, theta);
}

}  // namespace

TEST_CASE("dictionary layout") {
  const Dictionary d = benchmark_dictionary();
  CHECK(d.size() == 13);
  CHECK(d.e_degree() == 5);
  CHECK(d.f_degree() == 4);
  CHECK(d.label(0) == "e:x");
  CHECK(d.label(4) == "e:x^5");
  const Eigen::VectorXd th = benchmark_theta();
  CHECK(th(0) == doctest::Approx(1.0));
  CHECK(th(4) == doctest::Approx(0.2));
  CHECK(linear_dictionary(2, 1).size() == 4 + 6);
  CHECK(parse_dictionary(dictionary_to_string(d)) == d);
}

TEST_CASE("eval_e and eval_f") {
  const Dictionary dict = benchmark_dictionary();
  const ProjectiveModel zero(dict, Eigen::VectorXd::Zero(13));
  CHECK(zero.e(Eigen::VectorXd::Constant(1, 0.7))(0) == 0.0);
  CHECK(zero.f(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.2))(0) == 0.0);

  const ProjectiveModel truth(dict, benchmark_theta());
  CHECK(truth.e(Eigen::VectorXd::Constant(1, 1.0))(0) == doctest::Approx(1.2));

  std::mt19937_64 gen(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd theta(13);
  for (auto& v : theta) v = g(gen);
  const ProjectiveModel m(dict, theta);
  const double x = 0.8, w = -0.3;
  double e = 0.0, f = 0.0;
  for (std::size_t i = 0; i < dict.size(); ++i) {
    e += theta(static_cast<Eigen::Index>(i)) * dict.psi(i)[0](std::vector<double>{x});
    f += theta(static_cast<Eigen::Index>(i)) * dict.phi(i)[0](std::vector<double>{x, w});
  }
  CHECK(m.e(Eigen::VectorXd::Constant(1, x))(0) == doctest::Approx(e).epsilon(1e-13));
  CHECK(m.f(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, w))(0) == doctest::Approx(f).epsilon(1e-13));
  CHECK_THROWS_AS(m.e(Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST_CASE("Newton step") {
  const Eigen::MatrixXd a = (Eigen::MatrixXd(1, 1) << 0.5).finished();
  const Eigen::MatrixXd b = (Eigen::MatrixXd(1, 1) << 1.0).finished();
  const ProjectiveModel lin = linear_model(a, b);
  const Eigen::VectorXd xp = Eigen::VectorXd::Constant(1, 0.6), w = Eigen::VectorXd::Constant(1, 0.1);
  CHECK(step(lin, xp, w)(0) == doctest::Approx(0.4).epsilon(1e-12));

  const ProjectiveModel doubled = quintic_model(2.0, 0.0, 0.0);
  CHECK(solve_e(doubled, Eigen::VectorXd::Constant(1, 4.0), Eigen::VectorXd::Zero(1))(0) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const ProjectiveModel q = quintic_model(1.0, 0.0, 0.2);
  const double root = bisect([](double x) { return x + std::pow(x, 5) / 5; }, 5.0);
  CHECK(std::abs(solve_e(q, Eigen::VectorXd::Constant(1, 5.0), Eigen::VectorXd::Zero(1))(0) - root) <= 1e-12);

  // e(x) = x^2 has no preimage of -1.
  const Dictionary dict = monomial_dictionary(1, 1, 2, 0, 0);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dict.size()));
  th(1) = 1.0;
  const ProjectiveModel bad(dict, th);
  CHECK_THROWS_AS(solve_e(bad, Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 0.5)), NewtonFailure);
}

TEST_CASE("simulate") {
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(1, 1);
  const ProjectiveModel zero = linear_model(a0, a0);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(6, 1);
  const Eigen::MatrixXd xs = simulate(zero, Eigen::VectorXd::Constant(1, 3.0), w);
  CHECK(xs(0, 0) == 3.0);
  for (Eigen::Index t = 1; t < 6; ++t) CHECK(xs(t, 0) == 0.0);

  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0.5, 0.2, -0.1, 0.3;
  b << 1.0, -0.5;
  const ProjectiveModel lin = linear_model(a, b);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd win(30, 1);
  for (auto& v : win.reshaped()) v = u(gen);
  const Eigen::Vector2d x0(0.3, -0.4);
  const Eigen::MatrixXd sim = simulate(lin, x0, win);
  Eigen::Vector2d x = x0;
  for (Eigen::Index t = 1; t < 30; ++t) {
    x = a * x + b * win(t, 0);
    CHECK((sim.row(t).transpose() - x).norm() <= 1e-12);
  }

  const ProjectiveModel truth(benchmark_dictionary(), benchmark_theta());
  const Eigen::MatrixXd rest = simulate(truth, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(20, 1));
  CHECK(rest.cwiseAbs().maxCoeff() == 0.0);

  // Bit-for-bit determinism.
  CHECK(simulate(truth, Eigen::VectorXd::Zero(1), win.leftCols(1)) ==
        simulate(truth, Eigen::VectorXd::Zero(1), win.leftCols(1)));
}

TEST_CASE("sim_error") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const ProjectiveModel truth(benchmark_dictionary(), benchmark_theta());
  Eigen::MatrixXd w(11, 1);
  for (Eigen::Index t = 0; t < 11; ++t) w(t, 0) = std::sin(static_cast<double>(t));
  const Eigen::MatrixXd own = simulate(truth, Eigen::VectorXd::Constant(1, 0.2), w);
  CHECK(sim_error(truth, Eigen::VectorXd::Constant(1, 0.2), own, w, one) == 0.0);

  const ProjectiveModel zero = linear_model(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1));
  const double c = 1.7;
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(11, 1, c);
  CHECK(sim_error(zero, Eigen::VectorXd::Constant(1, c), flat, w, one) == doctest::Approx(9 * c * c / 10));

  Eigen::MatrixXd a(2, 2), b(2, 1), cmat(1, 2);
  a << 0.4, 0.1, 0.0, -0.3;
  b << 1.0, 0.5;
  cmat << 1.0, 2.0;
  const ProjectiveModel lin = linear_model(a, b);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd xt(11, 2);
  for (auto& v : xt.reshaped()) v = g(gen);
  const Eigen::Vector2d x0(0.1, 0.2);
  Eigen::Vector2d x = x0;
  double naive = 0.0;
  for (Eigen::Index t = 0; t < 10; ++t) {
    if (t > 0) x = a * x + b * w(t, 0);
    naive += std::pow((cmat * (xt.row(t).transpose() - x))(0), 2);
  }
  CHECK(sim_error(lin, x0, xt, w, cmat) == doctest::Approx(naive / 10).epsilon(1e-12));
  CHECK_THROWS_AS(sim_error(lin, x0, xt.topRows(5), w, cmat), DimensionError);
}

TEST_CASE("surrogate and jhat_r") {
  Eigen::MatrixXd w(6, 1), x(6, 1);
  w << 0, 0.5, -0.2, 0.1, 0.9, -0.4;
  x << 0.3, 0.1, -0.6, 0.2, 0.7, 0.0;
  const DataSet ds(w, {x, x, x, x});
  CHECK(jhat_r(Polynomial(3), ds) == 0.0);
  CHECK(jhat_r(Polynomial::constant(3, 1.0), ds) == doctest::Approx(1.0));

  const MonomialBasis aleph = default_aleph(4, 3);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd r(aleph.size(), aleph.size());
  for (auto& v : r.reshaped()) v = g(gen);
  r = 0.5 * (r + r.transpose()).eval();
  const SurrogatePair sp = surrogate_from_gram(r, aleph);
  const MomentMatrix m = moment_matrix(ds, aleph);
  CHECK(jhat_r(sp, ds) == doctest::Approx((r * m.matrix).trace()).epsilon(1e-10));

  // Coefficient identity r(z) = sum R_ij z^(a_i + a_j).
  const Eigen::Vector3d z(0.3, -1.2, 0.8);
  const Eigen::VectorXd mz = aleph.evaluate(std::span<const double>(z.data(), 3));
  CHECK(sp.r(Eigen::VectorXd(z)) == doctest::Approx(mz.dot(r * mz)).epsilon(1e-10));
}

TEST_CASE("stability probe") {
  CHECK(fitted_rate(std::vector<double>(10, 0.0)) == 0.0);
  std::vector<double> geo;
  for (int t = 0; t < 40; ++t) geo.push_back(std::pow(0.25, t));
  CHECK(fitted_rate(geo) == doctest::Approx(0.5).epsilon(1e-9));

  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0.5, 0.3, 0.0, -0.4;
  b << 1.0, 1.0;
  const ProbeReport lin = stability_probe(linear_model(a, b), {20, 100, 5, 1.0, 1.0});
  CHECK(lin.passed());
  CHECK(lin.max_rate <= 0.6);

  const ProbeReport truth =
      stability_probe(ProjectiveModel(benchmark_dictionary(), benchmark_theta()), {20, 100, 5, 2.0, 1.0});
  CHECK(truth.passed());

  const ProbeReport unstable = stability_probe(linear_model(Eigen::MatrixXd::Constant(1, 1, 1.1), b.topRows(1)),
                                               {5, 100, 5, 1.0, 1.0});
  CHECK_FALSE(unstable.passed());
}

TEST_CASE("model file round trip") {
  const Dictionary dict = benchmark_dictionary();
  ProjectiveModel m(dict, benchmark_theta(), 0.01);
  m.provenance.algorithm = "A";
  m.provenance.dataset_hash = "abc";
  m.provenance.seed = 42;
  m.provenance.config = R"({"delta":0.01})";
  const MonomialBasis aleph = default_aleph(2, 3);
  const SurrogatePair sp = surrogate_from_gram(Eigen::MatrixXd::Identity(4, 4), aleph);
  const auto path = std::filesystem::temp_directory_path() / "stableid_test_model.json";
  save_model(m, path, sp);
  const LoadedModel back = load_model(path);
  CHECK(back.model.theta() == m.theta());
  CHECK(back.model.delta() == 0.01);
  CHECK(back.model.dictionary() == dict);
  CHECK(back.model.provenance.seed == 42);
  CHECK(back.model.provenance.algorithm == "A");
  REQUIRE(back.surrogate.has_value());
  CHECK(back.surrogate->aleph == aleph);
  CHECK(back.surrogate->R == sp.R);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_model("{\"theta\": [1,"), ParseError);
}

TEST_CASE("matrix CSV") {
  const Eigen::MatrixXd m = parse_matrix_csv("w1,w2\n1,2\n3,4.5\n");
  CHECK(m.rows() == 2);
  CHECK(m(1, 1) == 4.5);
  CHECK(parse_matrix_csv("0.5\n-1\n").rows() == 2);
  CHECK_THROWS_AS(parse_matrix_csv("1,2\n3\n"), ParseError);
}
