#include "stableid/poly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stableid/errors.hpp"

namespace stableid {

// ---------------------------------------------------------------------------
// VectorDegree

VectorDegree::VectorDegree(std::vector<int> exponents) : exps_(std::move(exponents)) {
  for (int e : exps_) {
    if (e < 0) throw std::invalid_argument("vector degree entries must be non-negative");
    total_ += e;
  }
}

VectorDegree VectorDegree::zero(std::size_t var_count) {
  return VectorDegree(std::vector<int>(var_count, 0));
}

VectorDegree VectorDegree::unit(std::size_t var_count, std::size_t coordinate, int power) {
  if (coordinate >= var_count) throw std::invalid_argument("unit degree: coordinate out of range");
  std::vector<int> e(var_count, 0);
  e[coordinate] = power;
  return VectorDegree(std::move(e));
}

VectorDegree VectorDegree::operator+(const VectorDegree& other) const {
  if (other.size() != size()) throw DimensionError("vector degree sizes differ");
  std::vector<int> e(exps_);
  for (std::size_t d = 0; d < e.size(); ++d) e[d] += other.exps_[d];
  return VectorDegree(std::move(e));
}

VectorDegree VectorDegree::scaled(int factor) const {
  std::vector<int> e(exps_);
  for (int& x : e) x *= factor;
  return VectorDegree(std::move(e));
}

VectorDegree VectorDegree::embedded(std::size_t offset, std::size_t var_count) const {
  if (offset + size() > var_count) throw DimensionError("embedding does not fit");
  std::vector<int> e(var_count, 0);
  std::copy(exps_.begin(), exps_.end(), e.begin() + static_cast<std::ptrdiff_t>(offset));
  return VectorDegree(std::move(e));
}

VectorDegree VectorDegree::slice(std::size_t offset, std::size_t count) const {
  if (offset + count > size()) throw DimensionError("slice out of range");
  return VectorDegree(std::vector<int>(exps_.begin() + static_cast<std::ptrdiff_t>(offset),
                                       exps_.begin() + static_cast<std::ptrdiff_t>(offset + count)));
}

std::strong_ordering operator<=>(const VectorDegree& a, const VectorDegree& b) {
  if (auto c = a.total_ <=> b.total_; c != 0) return c;
  if (auto c = a.exps_.size() <=> b.exps_.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.exps_.begin(), a.exps_.end(), b.exps_.begin(),
                                                b.exps_.end());
}

std::string VectorDegree::to_string(std::span<const std::string> names) const {
  if (is_zero()) return "1";
  std::ostringstream os;
  bool first = true;
  for (std::size_t d = 0; d < exps_.size(); ++d) {
    if (exps_[d] == 0) continue;
    if (!first) os << '*';
    first = false;
    if (d < names.size())
      os << names[d];
    else
      os << 'v' << d;
    if (exps_[d] > 1) os << '^' << exps_[d];
  }
  return os.str();
}

double monomial_eval(const VectorDegree& alpha, std::span<const double> v) {
  if (v.size() != alpha.size())
    throw DimensionError("monomial_eval: point has " + std::to_string(v.size()) +
                         " coordinates, degree has " + std::to_string(alpha.size()));
  double out = 1.0;
  for (std::size_t d = 0; d < v.size(); ++d)
    for (int k = 0; k < alpha[d]; ++k) out *= v[d];
  return out;
}

std::size_t beta_index(const VectorDegree& alpha, std::size_t i) {
  if (i >= static_cast<std::size_t>(alpha.total_degree()))
    throw std::out_of_range("beta_index: factor " + std::to_string(i) + " out of range for degree " +
                            std::to_string(alpha.total_degree()));
  std::size_t cumulative = 0;
  for (std::size_t d = 0; d < alpha.size(); ++d) {
    cumulative += static_cast<std::size_t>(alpha[d]);
    if (cumulative > i) return d;
  }
  throw std::logic_error("beta_index: unreachable");
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(std::size_t var_count) : n_(var_count) {}

Polynomial::Polynomial(std::size_t var_count, const TermMap& terms) : n_(var_count) {
  for (const auto& [alpha, c] : terms) add_term(alpha, c);
}

Polynomial Polynomial::constant(std::size_t var_count, double c) {
  Polynomial p(var_count);
  p.add_term(VectorDegree::zero(var_count), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t var_count, std::size_t coordinate) {
  Polynomial p(var_count);
  p.add_term(VectorDegree::unit(var_count, coordinate), 1.0);
  return p;
}

Polynomial Polynomial::monomial(const VectorDegree& alpha, double c) {
  Polynomial p(alpha.size());
  p.add_term(alpha, c);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [alpha, c] : terms_) d = std::max(d, alpha.total_degree());
  return d;
}

double Polynomial::coefficient(const VectorDegree& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [alpha, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

void Polynomial::add_term(const VectorDegree& alpha, double c) {
  if (alpha.size() != n_)
    throw DimensionError("term has " + std::to_string(alpha.size()) +
                         " variables, polynomial has " + std::to_string(n_));
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(alpha, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(std::span<const double> v) const {
  if (v.size() != n_)
    throw DimensionError("poly_eval: point has " + std::to_string(v.size()) +
                         " coordinates, polynomial has " + std::to_string(n_) + " variables");
  double sum = 0.0;
  for (const auto& [alpha, c] : terms_) sum += c * monomial_eval(alpha, v);
  return sum;
}

Polynomial Polynomial::operator-() const {
  Polynomial p(*this);
  for (auto& [alpha, c] : p.terms_) c = -c;
  return p;
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  if (q.n_ != n_) throw DimensionError("polynomial variable counts differ");
  for (const auto& [alpha, c] : q.terms_) add_term(alpha, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  if (q.n_ != n_) throw DimensionError("polynomial variable counts differ");
  for (const auto& [alpha, c] : q.terms_) add_term(alpha, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double c) {
  if (c == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [alpha, coef] : terms_) coef *= c;
  return *this;
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  if (p.n_ != q.n_) throw DimensionError("polynomial variable counts differ");
  Polynomial out(p.n_);
  for (const auto& [a, ca] : p.terms_)
    for (const auto& [b, cb] : q.terms_) out.add_term(a + b, ca * cb);
  return out;
}

Polynomial Polynomial::embedded(std::size_t offset, std::size_t var_count) const {
  Polynomial out(var_count);
  for (const auto& [alpha, c] : terms_) out.add_term(alpha.embedded(offset, var_count), c);
  return out;
}

Polynomial Polynomial::pruned(double rel_tol) const {
  const double cut = rel_tol * max_abs_coefficient();
  Polynomial out(n_);
  for (const auto& [alpha, c] : terms_)
    if (std::abs(c) > cut) out.add_term(alpha, c);
  return out;
}

std::string Polynomial::to_string(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [alpha, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << '-';
    first = false;
    const double a = std::abs(c);
    if (alpha.is_zero()) {
      os << a;
    } else {
      if (a != 1.0) os << a << '*';
      os << alpha.to_string(names);
    }
  }
  return os.str();
}

Polynomial pow(const Polynomial& p, int k) {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial out = Polynomial::constant(p.var_count(), 1.0);
  Polynomial base = p;
  while (k > 0) {
    if (k & 1) out = out * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return out;
}

Polynomial derivative(const Polynomial& p, std::size_t coordinate) {
  if (coordinate >= p.var_count()) throw DimensionError("derivative: coordinate out of range");
  Polynomial out(p.var_count());
  for (const auto& [alpha, c] : p.terms()) {
    if (alpha[coordinate] == 0) continue;
    std::vector<int> e = alpha.exponents();
    const int k = e[coordinate]--;
    out.add_term(VectorDegree(std::move(e)), c * k);
  }
  return out;
}

Polynomial substitute(const Polynomial& p, std::span<const Polynomial> images) {
  if (images.size() != p.var_count())
    throw DimensionError("substitute: need one image per source variable");
  if (images.empty()) return p;
  const std::size_t target_n = images.front().var_count();
  for (const auto& img : images) {
    if (img.var_count() != target_n) throw DimensionError("substitute: images disagree on variables");
    if (img.degree() > 1) throw std::invalid_argument("substitute: non-affine substitution");
  }
  // Powers of each image, grown on demand.
  std::vector<std::vector<Polynomial>> powers(images.size());
  auto power_of = [&](std::size_t d, int k) -> const Polynomial& {
    auto& cache = powers[d];
    if (cache.empty()) cache.push_back(Polynomial::constant(target_n, 1.0));
    while (static_cast<int>(cache.size()) <= k) cache.push_back(cache.back() * images[d]);
    return cache[static_cast<std::size_t>(k)];
  };
  Polynomial out(target_n);
  for (const auto& [alpha, c] : p.terms()) {
    Polynomial term = Polynomial::constant(target_n, c);
    for (std::size_t d = 0; d < alpha.size(); ++d)
      if (alpha[d] > 0) term = term * power_of(d, alpha[d]);
    out += term;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MonomialBasis

MonomialBasis::MonomialBasis(std::vector<VectorDegree> degrees) : degrees_(std::move(degrees)) {
  if (!degrees_.empty()) {
    n_ = degrees_.front().size();
    for (const auto& d : degrees_)
      if (d.size() != n_) throw DimensionError("monomial basis entries differ in size");
  }
  std::sort(degrees_.begin(), degrees_.end());
  degrees_.erase(std::unique(degrees_.begin(), degrees_.end()), degrees_.end());
}

std::optional<std::size_t> MonomialBasis::index_of(const VectorDegree& alpha) const {
  auto it = std::lower_bound(degrees_.begin(), degrees_.end(), alpha);
  if (it == degrees_.end() || !(*it == alpha)) return std::nullopt;
  return static_cast<std::size_t>(it - degrees_.begin());
}

int MonomialBasis::max_degree() const {
  return degrees_.empty() ? 0 : degrees_.back().total_degree();
}

Eigen::VectorXd MonomialBasis::evaluate(std::span<const double> v) const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(degrees_.size()));
  for (std::size_t j = 0; j < degrees_.size(); ++j)
    m(static_cast<Eigen::Index>(j)) = monomial_eval(degrees_[j], v);
  return m;
}

MonomialBasis basis_up_to_degree(std::size_t var_count, int max_degree) {
  if (var_count == 0) throw std::invalid_argument("basis_up_to_degree: need at least one variable");
  if (max_degree < 0) throw std::invalid_argument("basis_up_to_degree: negative degree");
  std::vector<VectorDegree> out;
  std::vector<int> e(var_count, 0);
  // Enumerate all compositions with total <= max_degree.
  std::function<void(std::size_t, int)> rec = [&](std::size_t d, int remaining) {
    if (d == var_count) {
      out.emplace_back(e);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      e[d] = k;
      rec(d + 1, remaining - k);
    }
    e[d] = 0;
  };
  rec(0, max_degree);
  return MonomialBasis(std::move(out));
}

MonomialBasis basis_union(const MonomialBasis& a, const MonomialBasis& b) {
  std::vector<VectorDegree> all(a.degrees());
  all.insert(all.end(), b.begin(), b.end());
  return MonomialBasis(std::move(all));
}

}  // namespace stableid
