#include "stableid/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "lowering.hpp"
#include "stableid/errors.hpp"

namespace stableid {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_entry(const Block& b, std::size_t i, std::size_t j) {
  if (b.is_matrix()) {
    if (i >= b.dim || j >= b.dim) throw std::out_of_range("entry outside block '" + b.name + "'");
  } else if (i >= b.dim || j != 0) {
    throw std::out_of_range("entry outside block '" + b.name + "'");
  }
}

std::vector<Term> merge_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    return std::tie(a.block, a.i, a.j) < std::tie(b.block, b.i, b.j);
  });
  std::vector<Term> out;
  for (const Term& t : terms) {
    if (!out.empty() && out.back().block == t.block && out.back().i == t.i && out.back().j == t.j)
      out.back().coef += t.coef;
    else
      out.push_back(t);
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  return out;
}

}  // namespace

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Free: return "free";
    case BlockKind::Symmetric: return "sym";
    case BlockKind::Psd: return "psd";
    case BlockKind::Soc: return "soc";
  }
  return "?";
}

BlockKind parse_block_kind(std::string_view text) {
  if (text == "free") return BlockKind::Free;
  if (text == "sym") return BlockKind::Symmetric;
  if (text == "psd") return BlockKind::Psd;
  if (text == "soc") return BlockKind::Soc;
  throw std::invalid_argument("unknown block kind '" + std::string(text) + "'");
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

SolveStatus parse_status(std::string_view text) {
  if (text == "optimal") return SolveStatus::Optimal;
  if (text == "infeasible") return SolveStatus::Infeasible;
  if (text == "unbounded") return SolveStatus::Unbounded;
  if (text == "numerical-failure") return SolveStatus::NumericalFailure;
  throw std::invalid_argument("unknown solve status '" + std::string(text) + "'");
}

std::size_t ConicProgram::add_block(std::string name, BlockKind kind, std::size_t dim, double shift) {
  if (name.empty() || name.find_first_of(" \t\n#") != std::string::npos)
    throw std::invalid_argument("block names must be non-empty and free of whitespace");
  if (find_block(name)) throw std::invalid_argument("duplicate block '" + name + "'");
  if (dim == 0) throw std::invalid_argument("block '" + name + "' has dimension 0");
  if (kind == BlockKind::Soc && dim < 2) throw std::invalid_argument("cone block needs dimension >= 2");
  if (shift != 0.0 && kind != BlockKind::Psd) throw std::invalid_argument("only PSD blocks take a shift");
  if (!std::isfinite(shift)) throw std::invalid_argument("shift must be finite");
  blocks_.push_back(Block{std::move(name), kind, dim, shift});
  return blocks_.size() - 1;
}

std::optional<std::size_t> ConicProgram::find_block(std::string_view name) const {
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (blocks_[k].name == name) return k;
  return std::nullopt;
}

std::size_t ConicProgram::block_index(std::string_view name) const {
  if (auto k = find_block(name)) return *k;
  throw std::out_of_range("no block named '" + std::string(name) + "'");
}

Term ConicProgram::canonical(Term t) const {
  if (t.block >= blocks_.size()) throw std::out_of_range("term refers to a missing block");
  const Block& b = blocks_[t.block];
  if (b.is_matrix() && t.i > t.j) std::swap(t.i, t.j);
  check_entry(b, t.i, t.j);
  if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient");
  return t;
}

std::size_t ConicProgram::add_row(LinearRow row) {
  for (Term& t : row.terms) t = canonical(t);
  if (!std::isfinite(row.rhs)) throw std::invalid_argument("non-finite right-hand side");
  if (row.label.find('\n') != std::string::npos) throw std::invalid_argument("row labels are single-line");
  row.terms = merge_terms(std::move(row.terms));
  rows_.push_back(std::move(row));
  return rows_.size() - 1;
}

void ConicProgram::add_objective(const Term& t) {
  objective_.push_back(canonical(t));
  objective_ = merge_terms(std::move(objective_));
}

void ConicProgram::set_norm_ball(NormBall ball) {
  if (ball.block >= blocks_.size()) throw std::out_of_range("norm ball refers to a missing block");
  if (!(ball.radius_sq > 0.0) || !std::isfinite(ball.radius_sq))
    throw std::invalid_argument("norm ball radius must be positive and finite");
  ball_ = ball;
}

double ConicProgram::evaluate(const std::vector<Term>& terms, const std::vector<Eigen::MatrixXd>& values) const {
  double s = 0.0;
  for (const Term& t : terms)
    s += t.coef * values.at(t.block)(static_cast<Eigen::Index>(t.i), static_cast<Eigen::Index>(t.j));
  return s;
}

std::vector<Eigen::MatrixXd> ConicProgram::zero_values() const {
  std::vector<Eigen::MatrixXd> out;
  for (const Block& b : blocks_) {
    const auto n = static_cast<Eigen::Index>(b.dim);
    out.push_back(Eigen::MatrixXd::Zero(n, b.is_matrix() ? n : 1));
  }
  return out;
}

// ---------------------------------------------------------------- text form

namespace {

void write_terms(std::ostringstream& os, const std::vector<Term>& terms) {
  os << ' ' << terms.size();
  for (const Term& t : terms) os << ' ' << t.block << ' ' << t.i << ' ' << t.j << ' ' << format_double(t.coef);
}

class LineReader {
 public:
  LineReader(const std::string& line, std::size_t line_no) : in_(line), line_no_(line_no) {}

  template <class T>
  T next(const char* what) {
    T v{};
    if (!(in_ >> v)) throw ParseError(std::string("expected ") + what, line_no_, column());
    return v;
  }

  double number(const char* what) {
    const auto tok = next<std::string>(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("malformed number for ") + what, line_no_, column());
    }
  }

  std::vector<Term> terms() {
    const auto n = next<std::size_t>("term count");
    std::vector<Term> out(n);
    for (Term& t : out) {
      t.block = next<std::size_t>("term block");
      t.i = next<std::size_t>("term row");
      t.j = next<std::size_t>("term column");
      t.coef = number("term coefficient");
    }
    return out;
  }

  std::string rest() {
    std::string r;
    std::getline(in_, r);
    const auto first = r.find_first_not_of(' ');
    return first == std::string::npos ? std::string() : r.substr(first);
  }

  std::size_t line() const { return line_no_; }
  std::size_t column() {
    const auto pos = in_.tellg();
    return pos < 0 ? 1 : static_cast<std::size_t>(pos) + 1;
  }

 private:
  std::istringstream in_;
  std::size_t line_no_;
};

}  // namespace

std::string program_to_text(const ConicProgram& cp) {
  std::ostringstream os;
  os << "conic-program v1\n";
  for (const Block& b : cp.blocks())
    os << "block " << b.name << ' ' << to_string(b.kind) << ' ' << b.dim << ' ' << format_double(b.shift) << '\n';
  for (const LinearRow& r : cp.rows()) {
    os << "eq " << format_double(r.rhs);
    write_terms(os, r.terms);
    if (!r.label.empty()) os << " # " << r.label;
    os << '\n';
  }
  os << "obj " << format_double(cp.objective_constant());
  write_terms(os, cp.objective());
  os << '\n';
  if (const auto& ball = cp.norm_ball()) os << "ball " << ball->block << ' ' << format_double(ball->radius_sq) << '\n';
  for (const auto& [k, v] : cp.metadata) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("metadata keys must be single words and values single lines");
    os << "meta " << k << ' ' << v << '\n';
  }
  os << "end\n";
  return os.str();
}

ConicProgram parse_program(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  ConicProgram cp;
  bool header = false, ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (ended) throw ParseError("content after 'end'", line_no, 1);
    if (!header) {
      if (line != "conic-program v1") throw ParseError("missing 'conic-program v1' header", line_no, 1);
      header = true;
      continue;
    }
    std::string body = line, label;
    if (const auto hash = line.find(" # "); hash != std::string::npos) {
      body = line.substr(0, hash);
      label = line.substr(hash + 3);
    }
    LineReader r(body, line_no);
    const auto key = r.next<std::string>("keyword");
    try {
      if (key == "block") {
        const auto name = r.next<std::string>("block name");
        const auto kind = parse_block_kind(r.next<std::string>("block kind"));
        const auto dim = r.next<std::size_t>("block dimension");
        const double shift = r.number("block shift");
        cp.add_block(name, kind, dim, shift);
      } else if (key == "eq") {
        LinearRow row;
        row.rhs = r.number("right-hand side");
        row.terms = r.terms();
        row.label = label;
        cp.add_row(std::move(row));
      } else if (key == "obj") {
        cp.add_objective_constant(r.number("objective constant"));
        for (const Term& t : r.terms()) cp.add_objective(t);
      } else if (key == "ball") {
        const auto block = r.next<std::size_t>("ball block");
        cp.set_norm_ball(NormBall{block, r.number("ball radius")});
      } else if (key == "meta") {
        const auto k = r.next<std::string>("metadata key");
        cp.metadata[k] = r.rest();
      } else if (key == "end") {
        ended = true;
      } else {
        throw ParseError("unknown keyword '" + key + "'", line_no, 1);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  }
  if (!header) throw ParseError("empty conic program");
  if (!ended) throw ParseError("conic program is truncated (no 'end')", line_no, 1);
  return cp;
}

std::string solution_to_text(const Solution& sol) {
  std::ostringstream os;
  os << "conic-solution v1\n";
  os << "status " << to_string(sol.status) << '\n';
  os << "objective " << format_double(sol.objective) << '\n';
  os << "iterations " << sol.iterations << '\n';
  if (!sol.backend.empty()) os << "backend " << sol.backend << '\n';
  for (std::size_t k = 0; k < sol.values.size(); ++k) {
    const Eigen::MatrixXd& v = sol.values[k];
    os << "value " << k << ' ' << v.rows() << ' ' << v.cols();
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      for (Eigen::Index r = 0; r < v.rows(); ++r) os << ' ' << format_double(v(r, c));
    os << '\n';
  }
  os << "dual " << sol.dual.size();
  for (Eigen::Index k = 0; k < sol.dual.size(); ++k) os << ' ' << format_double(sol.dual(k));
  os << "\nend\n";
  return os.str();
}

Solution parse_solution(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Solution sol;
  bool header = false, ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header) {
      if (line != "conic-solution v1") throw ParseError("missing 'conic-solution v1' header", line_no, 1);
      header = true;
      continue;
    }
    LineReader r(line, line_no);
    const auto key = r.next<std::string>("keyword");
    try {
      if (key == "status") {
        sol.status = parse_status(r.next<std::string>("status"));
      } else if (key == "objective") {
        sol.objective = r.number("objective");
      } else if (key == "iterations") {
        sol.iterations = r.next<int>("iteration count");
      } else if (key == "backend") {
        sol.backend = r.rest();
      } else if (key == "value") {
        const auto k = r.next<std::size_t>("block index");
        if (k != sol.values.size()) throw ParseError("values must be listed in block order", line_no, 1);
        const auto rows = r.next<Eigen::Index>("rows");
        const auto cols = r.next<Eigen::Index>("columns");
        Eigen::MatrixXd v(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
          for (Eigen::Index q = 0; q < rows; ++q) v(q, c) = r.number("value entry");
        sol.values.push_back(std::move(v));
      } else if (key == "dual") {
        const auto n = r.next<Eigen::Index>("dual length");
        sol.dual.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) sol.dual(k) = r.number("dual entry");
      } else if (key == "end") {
        ended = true;
        break;
      } else {
        throw ParseError("unknown keyword '" + key + "'", line_no, 1);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  }
  if (!ended) throw ParseError("solution is truncated (no 'end')", line_no, 1);
  return sol;
}

// ---------------------------------------------------------------- lowering

namespace detail {

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  Eigen::VectorXd v(static_cast<Eigen::Index>(svec_size(n)));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      const double x = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      v(static_cast<Eigen::Index>(svec_index(i, j))) = i == j ? x : x * std::sqrt(2.0);
    }
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t n) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      const double x = v(static_cast<Eigen::Index>(svec_index(i, j)));
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      m(ii, jj) = m(jj, ii) = i == j ? x : x * r;
    }
  return m;
}

namespace {

// Adds coef * V_ij of an original block to row `r` (or the objective when r < 0).
void lower_term(const ConicProgram& cp, LoweredProgram& lp, const Term& t, Eigen::Index r) {
  const Block& b = cp.block(t.block);
  const auto& slot = lp.slots[t.block];
  if (slot.kind == LoweredProgram::SlotKind::Free) {
    const auto col = static_cast<Eigen::Index>(slot.offset + (b.is_matrix() ? svec_index(t.i, t.j) : t.i));
    if (r < 0)
      lp.c_free(col) += t.coef;
    else
      lp.A_free(r, col) += t.coef;
    return;
  }
  const Cone& cone = lp.cones[slot.index];
  double coef = t.coef;
  std::size_t idx = t.i;
  if (cone.psd) {
    idx = svec_index(t.i, t.j);
    if (t.i != t.j) coef /= std::sqrt(2.0);
    if (t.i == t.j && b.shift != 0.0) {
      if (r < 0)
        lp.c0 += t.coef * b.shift;
      else
        lp.b(r) -= t.coef * b.shift;
    }
  }
  const auto col = static_cast<Eigen::Index>(cone.offset + idx);
  if (r < 0)
    lp.c_cone(col) += coef;
  else
    lp.A_cone(r, col) += coef;
}

double entry_weight(const Block& b, std::size_t i, std::size_t j) {
  return b.is_matrix() && i != j ? std::sqrt(2.0) : 1.0;
}

}  // namespace

LoweredProgram lower(const ConicProgram& cp) {
  LoweredProgram lp;
  for (const Block& b : cp.blocks()) {
    LoweredProgram::Slot slot;
    if (b.kind == BlockKind::Free || b.kind == BlockKind::Symmetric) {
      slot.kind = LoweredProgram::SlotKind::Free;
      slot.offset = lp.n_free;
      lp.n_free += b.scalar_count();
    } else {
      slot.kind = LoweredProgram::SlotKind::Cone;
      slot.index = lp.cones.size();
      Cone c{b.kind == BlockKind::Psd, b.dim, lp.n_cone};
      lp.n_cone += c.size();
      lp.cones.push_back(c);
    }
    lp.slots.push_back(slot);
  }
  std::size_t ball_entries = 0;
  if (const auto& ball = cp.norm_ball()) {
    ball_entries = cp.block(ball->block).scalar_count();
    lp.ball_cone = lp.cones.size();
    lp.cones.push_back(Cone{false, 1 + ball_entries, lp.n_cone});
    lp.n_cone += 1 + ball_entries;
  }
  const auto m = static_cast<Eigen::Index>(cp.rows().size() + (ball_entries ? 1 + ball_entries : 0));
  lp.A_free = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(lp.n_free));
  lp.A_cone = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(lp.n_cone));
  lp.b = Eigen::VectorXd::Zero(m);
  lp.c_free = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.n_free));
  lp.c_cone = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.n_cone));
  lp.c0 = cp.objective_constant();

  Eigen::Index r = 0;
  for (const LinearRow& row : cp.rows()) {
    lp.b(r) += row.rhs;
    for (const Term& t : row.terms) lower_term(cp, lp, t, r);
    ++r;
  }
  for (const Term& t : cp.objective()) lower_term(cp, lp, t, -1);

  if (const auto& ball = cp.norm_ball()) {
    const Cone& cone = lp.cones[*lp.ball_cone];
    const auto off = static_cast<Eigen::Index>(cone.offset);
    lp.A_cone(r, off) = 1.0;
    lp.b(r) = std::sqrt(ball->radius_sq);
    ++r;
    const Block& b = cp.block(ball->block);
    std::size_t e = 0;
    for (std::size_t j = 0; j < b.dim; ++j)
      for (std::size_t i = 0; i <= (b.is_matrix() ? j : 0); ++i, ++e) {
        const std::size_t ii = b.is_matrix() ? i : j, jj = b.is_matrix() ? j : 0;
        lp.A_cone(r, off + 1 + static_cast<Eigen::Index>(e)) = 1.0;
        lower_term(cp, lp, Term{ball->block, ii, jj, -entry_weight(b, ii, jj)}, r);
        ++r;
      }
  }
  return lp;
}

void pack(const ConicProgram& cp, const LoweredProgram& lp, const std::vector<Eigen::MatrixXd>& values,
          Eigen::VectorXd& x_free, Eigen::VectorXd& x_cone) {
  x_free = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.n_free));
  x_cone = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.n_cone));
  for (std::size_t k = 0; k < cp.blocks().size(); ++k) {
    const Block& b = cp.block(k);
    const auto& slot = lp.slots[k];
    const Eigen::MatrixXd& v = values[k];
    if (slot.kind == LoweredProgram::SlotKind::Free) {
      const auto off = static_cast<Eigen::Index>(slot.offset);
      if (b.is_matrix()) {
        for (std::size_t j = 0; j < b.dim; ++j)
          for (std::size_t i = 0; i <= j; ++i)
            x_free(off + static_cast<Eigen::Index>(svec_index(i, j))) =
                v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      } else {
        x_free.segment(off, v.rows()) = v.col(0);
      }
      continue;
    }
    const Cone& cone = lp.cones[slot.index];
    const auto off = static_cast<Eigen::Index>(cone.offset);
    if (cone.psd) {
      Eigen::MatrixXd shifted = v;
      shifted.diagonal().array() -= b.shift;
      x_cone.segment(off, static_cast<Eigen::Index>(cone.size())) = svec(shifted);
    } else {
      x_cone.segment(off, v.rows()) = v.col(0);
    }
  }
  if (const auto& ball = cp.norm_ball()) {
    const Cone& cone = lp.cones[*lp.ball_cone];
    const auto off = static_cast<Eigen::Index>(cone.offset);
    const Block& b = cp.block(ball->block);
    const Eigen::MatrixXd& v = values[ball->block];
    x_cone(off) = std::sqrt(ball->radius_sq);
    Eigen::Index e = 1;
    for (std::size_t j = 0; j < b.dim; ++j)
      for (std::size_t i = 0; i <= (b.is_matrix() ? j : 0); ++i, ++e) {
        const std::size_t ii = b.is_matrix() ? i : j, jj = b.is_matrix() ? j : 0;
        x_cone(off + e) = entry_weight(b, ii, jj) * v(static_cast<Eigen::Index>(ii), static_cast<Eigen::Index>(jj));
      }
  }
}

std::vector<Eigen::MatrixXd> unpack(const ConicProgram& cp, const LoweredProgram& lp, const Eigen::VectorXd& x_free,
                                    const Eigen::VectorXd& x_cone) {
  std::vector<Eigen::MatrixXd> out = cp.zero_values();
  for (std::size_t k = 0; k < cp.blocks().size(); ++k) {
    const Block& b = cp.block(k);
    const auto& slot = lp.slots[k];
    Eigen::MatrixXd& v = out[k];
    if (slot.kind == LoweredProgram::SlotKind::Free) {
      const auto off = static_cast<Eigen::Index>(slot.offset);
      if (b.is_matrix()) {
        for (std::size_t j = 0; j < b.dim; ++j)
          for (std::size_t i = 0; i <= j; ++i) {
            const double x = x_free(off + static_cast<Eigen::Index>(svec_index(i, j)));
            v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = x;
          }
      } else {
        v.col(0) = x_free.segment(off, v.rows());
      }
      continue;
    }
    const Cone& cone = lp.cones[slot.index];
    const auto off = static_cast<Eigen::Index>(cone.offset);
    if (cone.psd) {
      v = smat(x_cone.segment(off, static_cast<Eigen::Index>(cone.size())), b.dim);
      v.diagonal().array() += b.shift;
    } else {
      v.col(0) = x_cone.segment(off, v.rows());
    }
  }
  return out;
}

double cone_margin(const Cone& cone, const Eigen::Ref<const Eigen::VectorXd>& segment) {
  if (cone.psd) {
    const Eigen::MatrixXd m = smat(segment, cone.dim);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
  }
  return segment(0) - segment.tail(segment.size() - 1).norm();
}

}  // namespace detail

// ---------------------------------------------------------------- verify

std::size_t lowered_row_count(const ConicProgram& cp) {
  std::size_t m = cp.rows().size();
  if (const auto& ball = cp.norm_ball()) m += 1 + cp.block(ball->block).scalar_count();
  return m;
}

ResidualReport verify(const ConicProgram& cp, const Solution& sol, const VerifyTolerances& tol) {
  if (sol.values.size() != cp.blocks().size()) throw std::invalid_argument("solution has wrong number of blocks");
  for (std::size_t k = 0; k < cp.blocks().size(); ++k) {
    const Block& b = cp.block(k);
    const Eigen::MatrixXd& v = sol.values[k];
    const auto n = static_cast<Eigen::Index>(b.dim);
    if (v.rows() != n || v.cols() != (b.is_matrix() ? n : 1))
      throw std::invalid_argument("value of block '" + b.name + "' is misshaped");
    if (!v.allFinite()) throw std::invalid_argument("value of block '" + b.name + "' is not finite");
  }

  ResidualReport rep;
  for (std::size_t r = 0; r < cp.rows().size(); ++r) {
    const LinearRow& row = cp.rows()[r];
    const double res = std::abs(cp.evaluate(row.terms, sol.values) - row.rhs) / std::max(1.0, std::abs(row.rhs));
    if (res > rep.max_equality_residual) {
      rep.max_equality_residual = res;
      rep.worst_row = r;
    }
  }
  bool primal_ok = rep.max_equality_residual <= tol.equality;
  rep.min_cone_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cp.blocks().size(); ++k) {
    const Block& b = cp.block(k);
    const Eigen::MatrixXd& v = sol.values[k];
    if (b.kind == BlockKind::Psd) {
      Eigen::MatrixXd s = 0.5 * (v + v.transpose());
      s.diagonal().array() -= b.shift;
      const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues()(0);
      rep.psd_min_eigenvalue[b.name] = lo;
      primal_ok = primal_ok && lo >= -tol.psd;
    } else if (b.kind == BlockKind::Soc) {
      const double margin = v(0, 0) - v.col(0).tail(v.rows() - 1).norm();
      rep.min_cone_margin = std::min(rep.min_cone_margin, margin);
    }
  }
  if (!std::isfinite(rep.min_cone_margin)) rep.min_cone_margin = 0.0;
  primal_ok = primal_ok && rep.min_cone_margin >= -tol.cone;
  if (const auto& ball = cp.norm_ball()) {
    rep.ball_margin = std::sqrt(ball->radius_sq) - sol.values[ball->block].norm();
    primal_ok = primal_ok && rep.ball_margin >= -tol.cone * std::max(1.0, std::sqrt(ball->radius_sq));
  }
  rep.primal_objective = cp.evaluate(cp.objective(), sol.values) + cp.objective_constant();

  const std::size_t m = lowered_row_count(cp);
  rep.has_dual = static_cast<std::size_t>(sol.dual.size()) == m && sol.dual.allFinite();
  bool dual_ok = true;  // a manually supplied point is checked for primal feasibility only
  if (rep.has_dual) {
    const detail::LoweredProgram lp = detail::lower(cp);
    Eigen::VectorXd xf, xc;
    detail::pack(cp, lp, sol.values, xf, xc);
    const Eigen::VectorXd& y = sol.dual;
    rep.dual_objective = lp.b.dot(y) + lp.c0;
    const double cscale =
        1.0 + std::max(lp.c_free.size() ? lp.c_free.cwiseAbs().maxCoeff() : 0.0,
                       lp.c_cone.size() ? lp.c_cone.cwiseAbs().maxCoeff() : 0.0);
    double worst = 0.0;
    if (lp.n_free) worst = (lp.c_free - lp.A_free.transpose() * y).cwiseAbs().maxCoeff();
    const Eigen::VectorXd z = lp.c_cone - lp.A_cone.transpose() * y;
    for (const detail::Cone& c : lp.cones) {
      const double margin =
          detail::cone_margin(c, z.segment(static_cast<Eigen::Index>(c.offset), static_cast<Eigen::Index>(c.size())));
      worst = std::max(worst, -margin);
    }
    rep.dual_infeasibility = worst / cscale;
    rep.relative_gap = std::abs(rep.primal_objective - rep.dual_objective) /
                       (1.0 + std::abs(rep.primal_objective) + std::abs(rep.dual_objective));
    dual_ok = rep.dual_infeasibility <= tol.dual && rep.relative_gap <= tol.gap;
  }
  rep.within_tolerance = primal_ok && dual_ok;
  return rep;
}

std::string ResidualReport::summary() const {
  std::ostringstream os;
  os << "max equality residual " << max_equality_residual << " (row " << worst_row << ")";
  for (const auto& [name, lo] : psd_min_eigenvalue) os << ", min eig " << name << ' ' << lo;
  os << ", cone margin " << min_cone_margin;
  if (ball_margin != 0.0) os << ", ball margin " << ball_margin;
  os << ", primal " << primal_objective;
  if (has_dual) os << ", dual " << dual_objective << ", gap " << relative_gap << ", dual infeas " << dual_infeasibility;
  else os << ", no dual certificate";
  os << (within_tolerance ? " [ok]" : " [out of tolerance]");
  return os.str();
}

}  // namespace stableid
