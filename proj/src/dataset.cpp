#include "stableid/dataset.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "stableid/errors.hpp"

namespace stableid {

using json = nlohmann::json;

DataSet::DataSet(Eigen::MatrixXd input, std::vector<Eigen::MatrixXd> states,
                 std::optional<Eigen::MatrixXd> output_map)
    : input_(std::move(input)), states_(std::move(states)) {
  if (states_.empty()) throw DimensionError("data set needs at least one experiment");
  if (input_.rows() < 2) throw DimensionError("data set needs T >= 1 (at least two samples)");
  horizon_ = static_cast<std::size_t>(input_.rows()) - 1;
  n_w_ = static_cast<std::size_t>(input_.cols());
  n_x_ = static_cast<std::size_t>(states_.front().cols());
  if (n_x_ == 0) throw DimensionError("state dimension must be positive");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].rows() != input_.rows())
      throw DimensionError("experiment " + std::to_string(i) + " has " +
                           std::to_string(states_[i].rows()) + " samples, input has " +
                           std::to_string(input_.rows()));
    if (static_cast<std::size_t>(states_[i].cols()) != n_x_)
      throw DimensionError("experiment " + std::to_string(i) + " has state dimension " +
                           std::to_string(states_[i].cols()) + ", expected " +
                           std::to_string(n_x_));
  }
  if (output_map) {
    if (static_cast<std::size_t>(output_map->cols()) != n_x_)
      throw DimensionError("output map C must have n_x columns");
    if (!output_map->allFinite()) throw DimensionError("output map C has non-finite entries");
    c_ = std::move(*output_map);
  } else {
    c_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_x_), static_cast<Eigen::Index>(n_x_));
  }
}

DataSet DataSet::truncated(std::size_t horizon) const {
  if (horizon < 1 || horizon > horizon_) throw DimensionError("truncation horizon out of range");
  const auto rows = static_cast<Eigen::Index>(horizon + 1);
  std::vector<Eigen::MatrixXd> xs;
  xs.reserve(states_.size());
  for (const auto& x : states_) xs.push_back(x.topRows(rows));
  return DataSet(input_.topRows(rows), std::move(xs), c_);
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 1099511628211ull;
    }
  }
  void matrix(const Eigen::MatrixXd& m) {
    const std::int64_t r = m.rows(), c = m.cols();
    bytes(&r, sizeof r);
    bytes(&c, sizeof c);
    // Row-major traversal so the hash does not depend on storage order.
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        bytes(&v, sizeof v);
      }
  }
};

}  // namespace

std::string DataSet::content_hash() const {
  Fnv1a f;
  f.matrix(input_);
  for (const auto& x : states_) f.matrix(x);
  f.matrix(c_);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << f.h;
  return os.str();
}

bool operator==(const DataSet& a, const DataSet& b) {
  if (a.states_.size() != b.states_.size()) return false;
  if (a.input_.rows() != b.input_.rows() || a.input_.cols() != b.input_.cols()) return false;
  if (a.input_ != b.input_ || a.c_.rows() != b.c_.rows() || a.c_ != b.c_) return false;
  for (std::size_t i = 0; i < a.states_.size(); ++i)
    if (a.states_[i].cols() != b.states_[i].cols() || a.states_[i] != b.states_[i]) return false;
  return true;
}

Eigen::VectorXd embed_point(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, std::size_t t) {
  if (t < 1 || t >= static_cast<std::size_t>(x.rows()) || t >= static_cast<std::size_t>(w.rows()))
    throw std::out_of_range("embed: time index " + std::to_string(t) + " out of range");
  const Eigen::Index nx = x.cols(), nw = w.cols();
  const auto ti = static_cast<Eigen::Index>(t);
  Eigen::VectorXd z(2 * nx + nw);
  z.segment(0, nx) = x.row(ti).transpose();
  z.segment(nx, nx) = x.row(ti - 1).transpose();
  z.segment(2 * nx, nw) = w.row(ti).transpose();
  return z;
}

Eigen::VectorXd embed(const DataSet& ds, std::size_t experiment, std::size_t t) {
  if (experiment >= ds.experiments())
    throw std::out_of_range("embed: experiment " + std::to_string(experiment) + " out of range");
  if (t < 1 || t > ds.horizon())
    throw std::out_of_range("embed: time index " + std::to_string(t) + " out of range");
  return embed_point(ds.state(experiment), ds.input(), t);
}

DataSet siso_embed(std::span<const double> u, std::span<const double> y, std::size_t window,
                   std::size_t period) {
  if (window == 0 || window >= period)
    throw std::invalid_argument("siso_embed: need 0 < window < period");
  if (u.size() != y.size()) throw DimensionError("siso_embed: u and y lengths differ");
  const std::size_t n_exp = u.size() / period;
  if (n_exp < 1) throw DimensionError("siso_embed: record shorter than one period");
  const std::size_t len = u.size();
  const std::size_t steps = period - window;  // T; t runs over 0..T
  const auto n = static_cast<Eigen::Index>(window);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(steps + 1), n);
  std::vector<Eigen::MatrixXd> xs(n_exp, Eigen::MatrixXd(static_cast<Eigen::Index>(steps + 1), n));
  for (std::size_t t = 0; t <= steps; ++t) {
    for (std::size_t k = 0; k < window; ++k) {
      // Row entry k holds sample offset (window - k).
      const std::size_t off = window - k;
      w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = u[(t + off) % len];
      for (std::size_t i = 0; i < n_exp; ++i)
        xs[i](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) =
            y[(t + off + i * period) % len];
    }
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, n);
  c(0, 0) = 1.0;
  return DataSet(std::move(w), std::move(xs), c);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd read_rows(const json& j, const std::string& field, std::size_t rows, std::size_t cols) {
  if (!j.is_array()) throw ParseError("field '" + field + "' must be an array of rows");
  if (j.size() != rows)
    throw DimensionError("field '" + field + "' has " + std::to_string(j.size()) +
                         " rows, expected " + std::to_string(rows));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw DimensionError("field '" + field + "' row " + std::to_string(r) + " must hold " +
                           std::to_string(cols) + " numbers");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError("field '" + field + "' row " + std::to_string(r) + " column " +
                         std::to_string(c) + " is not a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

std::size_t read_count(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& v = doc[key];
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ParseError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace

std::string dataset_to_string(const DataSet& ds) {
  json doc;
  doc["format"] = "stableid-dataset";
  doc["n_x"] = ds.n_x();
  doc["n_w"] = ds.n_w();
  doc["N"] = ds.experiments();
  doc["T"] = ds.horizon();
  doc["w"] = matrix_rows(ds.input());
  json xs = json::array();
  for (const auto& x : ds.states()) xs.push_back(matrix_rows(x));
  doc["x"] = std::move(xs);
  doc["C"] = matrix_rows(ds.output_map());
  return doc.dump(1) + "\n";
}

DataSet parse_dataset(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string("malformed data set: ") + e.what(), line, col);
  }
  if (!doc.is_object()) throw ParseError("data set document must be an object");
  const std::size_t nx = read_count(doc, "n_x");
  const std::size_t nw = read_count(doc, "n_w");
  const std::size_t n_exp = read_count(doc, "N");
  const std::size_t horizon = read_count(doc, "T");
  if (!doc.contains("w")) throw ParseError("missing field 'w'");
  if (!doc.contains("x")) throw ParseError("missing field 'x'");
  Eigen::MatrixXd w = read_rows(doc["w"], "w", horizon + 1, nw);
  const auto& xj = doc["x"];
  if (!xj.is_array() || xj.size() != n_exp)
    throw DimensionError("field 'x' must hold N = " + std::to_string(n_exp) + " trajectories");
  std::vector<Eigen::MatrixXd> xs;
  for (std::size_t i = 0; i < n_exp; ++i) {
    const std::string field = "x[" + std::to_string(i) + "]";
    const auto& traj = xj[i];
    if (traj.is_array() && traj.size() != horizon + 1)
      throw DimensionError("experiment " + std::to_string(i) + " (" + field + ") has " +
                           std::to_string(traj.size()) + " samples, expected T+1 = " +
                           std::to_string(horizon + 1));
    xs.push_back(read_rows(traj, field, horizon + 1, nx));
  }
  std::optional<Eigen::MatrixXd> c;
  if (doc.contains("C")) {
    const auto& cj = doc["C"];
    if (!cj.is_array() || cj.empty()) throw ParseError("field 'C' must be a non-empty array");
    c = read_rows(cj, "C", cj.size(), nx);
  }
  return DataSet(std::move(w), std::move(xs), std::move(c));
}

DataSet load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data set file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

void save_dataset(const DataSet& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write data set file " + path.string());
  out << dataset_to_string(ds);
}

SisoRecord parse_siso_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  int col_u = -1, col_y = -1;
  SisoRecord rec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (col_u < 0) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] == "u") col_u = static_cast<int>(k);
        if (cells[k] == "y") col_y = static_cast<int>(k);
      }
      if (col_u < 0 || col_y < 0) throw ParseError("CSV header must name columns t,u,y", line_no, 1);
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max(col_u, col_y));
    if (cells.size() <= need) throw ParseError("CSV row has too few fields", line_no, 1);
    try {
      std::size_t used = 0;
      const double uv = std::stod(cells[static_cast<std::size_t>(col_u)], &used);
      const double yv = std::stod(cells[static_cast<std::size_t>(col_y)], &used);
      rec.u.push_back(uv);
      rec.y.push_back(yv);
    } catch (const std::exception&) {
      throw ParseError("CSV field is not a number", line_no, 1);
    }
  }
  if (col_u < 0) throw ParseError("CSV file is empty");
  return rec;
}

SisoRecord load_siso_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_siso_csv(ss.str());
}

}  // namespace stableid
