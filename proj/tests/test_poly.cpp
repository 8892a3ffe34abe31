#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "stableid/errors.hpp"
#include "stableid/poly.hpp"

using namespace stableid;

namespace {

Polynomial random_poly(std::mt19937_64& gen, std::size_t n, int max_deg, int terms) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  Polynomial p(n);
  for (int k = 0; k < terms; ++k) {
    std::vector<int> e(n, 0);
    int budget = deg(gen);
    for (std::size_t d = 0; d < n && budget > 0; ++d) {
      std::uniform_int_distribution<int> take(0, budget);
      e[d] = take(gen);
      budget -= e[d];
    }
    p.add_term(VectorDegree(e), coef(gen));
  }
  return p;
}

std::vector<double> random_point(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Independent evaluation: expand every power by repeated multiplication.
double naive_eval(const Polynomial& p, const std::vector<double>& v) {
  double s = 0.0;
  for (const auto& [alpha, c] : p.terms()) {
    double m = c;
    for (std::size_t d = 0; d < v.size(); ++d) m *= std::pow(v[d], alpha[d]);
    s += m;
  }
  return s;
}

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("monomial_eval") {
  CHECK(monomial_eval({1, 2}, std::vector<double>{2, 3}) == 18.0);
  CHECK(monomial_eval({0, 0, 0}, std::vector<double>{7, -1, 3}) == 1.0);
  CHECK(monomial_eval({2, 1, 1}, std::vector<double>{0.5, -1, 2}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(monomial_eval({1, 2}, std::vector<double>{1}), DimensionError);
}

TEST_CASE("vector degree rejects negative exponents") {
  CHECK_THROWS_AS(VectorDegree({1, -1}), std::invalid_argument);
  CHECK(VectorDegree({2, 0, 3}).total_degree() == 5);
}

TEST_CASE("graded lexicographic order") {
  const MonomialBasis b = basis_up_to_degree(2, 2);
  REQUIRE(b.size() == 6);
  CHECK(b[0] == VectorDegree({0, 0}));
  CHECK(b[1] == VectorDegree({0, 1}));
  CHECK(b[2] == VectorDegree({1, 0}));
  CHECK(b[3] == VectorDegree({0, 2}));
  CHECK(b[4] == VectorDegree({1, 1}));
  CHECK(b[5] == VectorDegree({2, 0}));
}

TEST_CASE("poly_eval") {
  Polynomial p(2);
  p.add_term({2, 0}, 1.0);
  p.add_term({0, 1}, 2.0);
  CHECK(p(std::vector<double>{3, 1}) == 11.0);
  CHECK(Polynomial(3)(std::vector<double>{1, 2, 3}) == 0.0);
  CHECK_THROWS_AS(p(std::vector<double>{1}), DimensionError);

  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial q = random_poly(gen, 3, 4, 5);
    const auto v = random_point(gen, 3);
    CHECK(q(v) == doctest::Approx(naive_eval(q, v)).epsilon(1e-12));
  }
}

TEST_CASE("ring operations") {
  const Polynomial x = Polynomial::variable(1, 0);
  const Polynomial one = Polynomial::constant(1, 1.0);
  const Polynomial diff = (x + one) * (x - one);
  CHECK(diff.term_count() == 2);
  CHECK(diff.coefficient({2}) == 1.0);
  CHECK(diff.coefficient({0}) == -1.0);

  std::mt19937_64 gen(5);
  const Polynomial p = random_poly(gen, 2, 3, 6);
  CHECK((p + (-1.0) * p).is_zero());
  CHECK((p * 0.0).is_zero());

  for (int trial = 0; trial < 10; ++trial) {
    const Polynomial a = random_poly(gen, 2, 3, 5);
    const Polynomial b = random_poly(gen, 2, 3, 5);
    const Polynomial c = random_poly(gen, 2, 3, 5);
    for (int k = 0; k < 20; ++k) {
      const auto v = random_point(gen, 2);
      const double av = naive_eval(a, v), bv = naive_eval(b, v), cv = naive_eval(c, v);
      const double scale = 1.0 + std::abs(av * bv * cv) + std::abs(av * bv) + std::abs(av * cv);
      CHECK(std::abs((a * b)(v) - av * bv) <= 1e-12 * scale);
      CHECK(std::abs((a + b)(v) - (av + bv)) <= 1e-12 * scale);
      CHECK(std::abs(((a * b) * c)(v) - (a * (b * c))(v)) <= 1e-12 * scale);
      CHECK(std::abs((a * (b + c))(v) - (a * b + a * c)(v)) <= 1e-12 * scale);
      CHECK(std::abs((a * b)(v) - (b * a)(v)) <= 1e-12 * scale);
    }
  }
  CHECK_THROWS_AS(Polynomial(2) + Polynomial(3), DimensionError);
}

TEST_CASE("affine substitution") {
  // Variables (x, d); substitute x -> x + d, d -> d.
  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial d = Polynomial::variable(2, 1);
  const Polynomial sq = pow(x, 2);
  const std::vector<Polynomial> shift{x + d, d};
  const Polynomial s = substitute(sq, shift);
  CHECK(s.coefficient({2, 0}) == 1.0);
  CHECK(s.coefficient({1, 1}) == 2.0);
  CHECK(s.coefficient({0, 2}) == 1.0);
  CHECK(s.term_count() == 3);

  std::mt19937_64 gen(3);
  const Polynomial p = random_poly(gen, 2, 4, 6);
  const std::vector<Polynomial> identity{x, d};
  CHECK(substitute(p, identity).terms() == p.terms());

  const Polynomial cube = substitute(pow(x, 3), shift);
  for (int k = 0; k < 10; ++k) {
    const auto v = random_point(gen, 2);
    CHECK(cube(v) == doctest::Approx(std::pow(v[0] + v[1], 3)).epsilon(1e-12));
  }

  // eval(substitute(p), v) == eval(p, affine(v)) for a general affine map.
  const std::vector<Polynomial> affine{2.0 * x - d + Polynomial::constant(2, 0.5), 3.0 * d - x};
  const Polynomial q = substitute(p, affine);
  for (int k = 0; k < 10; ++k) {
    const auto v = random_point(gen, 2);
    const std::vector<double> image{affine[0](v), affine[1](v)};
    CHECK(q(v) == doctest::Approx(naive_eval(p, image)).epsilon(1e-10));
  }

  const std::vector<Polynomial> bad{x * x, d};
  CHECK_THROWS_AS(substitute(p, bad), std::invalid_argument);
}

TEST_CASE("derivative") {
  Polynomial p(2);
  p.add_term({3, 1}, 2.0);
  p.add_term({0, 2}, 1.0);
  const Polynomial dx = derivative(p, 0);
  CHECK(dx.coefficient({2, 1}) == 6.0);
  CHECK(dx.term_count() == 1);
  const Polynomial dy = derivative(p, 1);
  CHECK(dy.coefficient({3, 0}) == 2.0);
  CHECK(dy.coefficient({0, 1}) == 2.0);
}

TEST_CASE("basis_up_to_degree cardinality") {
  CHECK(basis_up_to_degree(1, 2).size() == 3);
  CHECK(basis_up_to_degree(2, 2).size() == 6);
  CHECK(basis_up_to_degree(3, 4).size() == 35);
  for (int n = 1; n <= 5; ++n)
    for (int d = 0; d <= 8; ++d) {
      const auto b = basis_up_to_degree(static_cast<std::size_t>(n), d);
      CHECK(static_cast<long long>(b.size()) == binomial(n + d, d));
      for (std::size_t j = 1; j < b.size(); ++j) CHECK(b[j - 1] < b[j]);
    }
}

TEST_CASE("monomial basis sorts and deduplicates") {
  const MonomialBasis b({VectorDegree{2}, VectorDegree{0}, VectorDegree{2}, VectorDegree{1}});
  REQUIRE(b.size() == 3);
  CHECK(b.index_of(VectorDegree{1}) == std::optional<std::size_t>(1));
  CHECK_FALSE(b.contains(VectorDegree{3}));
}

TEST_CASE("beta_index") {
  const VectorDegree a{2, 1};
  CHECK(beta_index(a, 0) == 0);
  CHECK(beta_index(a, 1) == 0);
  CHECK(beta_index(a, 2) == 1);
  const VectorDegree b{0, 3};
  for (std::size_t i = 0; i < 3; ++i) CHECK(beta_index(b, i) == 1);
  CHECK_THROWS_AS(beta_index(b, 3), std::out_of_range);

  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> e(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> exps(4);
    for (auto& x : exps) x = e(gen);
    const VectorDegree alpha(exps);
    if (alpha.total_degree() > 6) continue;
    std::map<std::size_t, int> hist;
    for (int i = 0; i < alpha.total_degree(); ++i) ++hist[beta_index(alpha, static_cast<std::size_t>(i))];
    for (std::size_t d = 0; d < 4; ++d) CHECK(hist[d] == alpha[d]);
  }
}

TEST_CASE("multilinear lifting on equal arguments is the monomial") {
  std::mt19937_64 gen(23);
  const auto z = random_point(gen, 3);
  for (const auto& alpha : basis_up_to_degree(3, 4)) {
    double prod = 1.0;
    for (int i = 0; i < alpha.total_degree(); ++i) prod *= z[beta_index(alpha, static_cast<std::size_t>(i))];
    CHECK(prod == doctest::Approx(monomial_eval(alpha, z)).epsilon(1e-14));
  }
}

TEST_CASE("rendering is deterministic") {
  Polynomial p(2);
  p.add_term({0, 1}, -2.0);
  p.add_term({2, 0}, 1.0);
  p.add_term({0, 0}, 3.0);
  const std::vector<std::string> names{"x", "w"};
  CHECK(p.to_string(names) == "3 - 2*w + x^2");
}
