#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "stableid/sos.hpp"

namespace stableid {

namespace {

constexpr double kEps = 1e-9;

bool within_bounds(const std::vector<VectorDegree>& points, const VectorDegree& target) {
  for (std::size_t d = 0; d < target.size(); ++d) {
    int lo = points.front()[d], hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    if (target[d] < lo || target[d] > hi) return false;
  }
  return true;
}

}  // namespace

bool in_convex_hull(const std::vector<VectorDegree>& points, const VectorDegree& target) {
  if (points.empty()) return false;
  for (const auto& p : points)
    if (p.size() != target.size()) throw std::invalid_argument("in_convex_hull: dimension mismatch");
  if (std::find(points.begin(), points.end(), target) != points.end()) return true;
  if (!within_bounds(points, target)) return false;

  // Phase one: rows sum_s lambda_s p_s = target and sum_s lambda_s = 1,
  // lambda >= 0, one artificial per row.
  const std::size_t n = target.size(), m = n + 1, s = points.size();
  const std::size_t cols = s + m + 1;  // structural, artificial, rhs
  std::vector<std::vector<double>> tab(m, std::vector<double>(cols, 0.0));
  for (std::size_t r = 0; r < m; ++r) {
    double rhs = r < n ? target[r] : 1.0;
    for (std::size_t k = 0; k < s; ++k) tab[r][k] = r < n ? points[k][r] : 1.0;
    if (rhs < 0.0) {
      for (std::size_t k = 0; k < s; ++k) tab[r][k] = -tab[r][k];
      rhs = -rhs;
    }
    tab[r][s + r] = 1.0;
    tab[r][cols - 1] = rhs;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) basis[r] = s + r;
  // reduced costs of the phase-one objective sum of artificials
  std::vector<double> cost(cols, 0.0);
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t r = 0; r < m; ++r) cost[k] -= tab[r][k];
  for (std::size_t r = 0; r < m; ++r) cost[cols - 1] -= tab[r][cols - 1];

  for (int it = 0; it < 100000; ++it) {
    std::size_t enter = cols;
    for (std::size_t k = 0; k + 1 < cols; ++k)
      if (cost[k] < -kEps) {
        enter = k;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    double best = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (tab[r][enter] <= kEps) continue;
      const double ratio = tab[r][cols - 1] / tab[r][enter];
      if (leave == m || ratio < best - kEps || (std::abs(ratio - best) <= kEps && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == m) break;  // unbounded direction cannot occur in phase one
    const double piv = tab[leave][enter];
    for (double& v : tab[leave]) v /= piv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave || tab[r][enter] == 0.0) continue;
      const double f = tab[r][enter];
      for (std::size_t k = 0; k < cols; ++k) tab[r][k] -= f * tab[leave][k];
    }
    const double f = cost[enter];
    for (std::size_t k = 0; k < cols; ++k) cost[k] -= f * tab[leave][k];
    basis[leave] = enter;
  }
  return -cost[cols - 1] <= 1e-7;
}

MonomialBasis prune_gram_basis(const MonomialBasis& candidates, const std::vector<VectorDegree>& support) {
  std::vector<VectorDegree> kept;
  for (const auto& m : candidates)
    if (in_convex_hull(support, m.scaled(2))) kept.push_back(m);
  const std::set<VectorDegree> supp(support.begin(), support.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < kept.size(); ++a) {
      const VectorDegree twice = kept[a].scaled(2);
      if (supp.count(twice)) continue;
      bool reachable = false;
      for (std::size_t i = 0; i < kept.size() && !reachable; ++i)
        for (std::size_t j = i + 1; j < kept.size() && !reachable; ++j)
          reachable = kept[i] + kept[j] == twice;
      if (!reachable) {
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(a));
        changed = true;
        break;
      }
    }
  }
  return MonomialBasis(kept);
}

}  // namespace stableid
