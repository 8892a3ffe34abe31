#include "stableid/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/LU>

#include "json_io.hpp"
#include "stableid/errors.hpp"
#include "stableid/rng.hpp"

namespace stableid {

using json = nlohmann::json;

namespace {

Eigen::VectorXd eval_all(const std::vector<Polynomial>& ps, std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ps.size()));
  for (std::size_t a = 0; a < ps.size(); ++a) out(static_cast<Eigen::Index>(a)) = ps[a](v);
  return out;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

ProjectiveModel::ProjectiveModel(Dictionary dict, Eigen::VectorXd theta, double delta)
    : dict_(std::move(dict)), theta_(std::move(theta)), delta_(delta) {
  if (!theta_.allFinite()) throw std::invalid_argument("model parameters must be finite");
  e_ = dict_.e_components(theta_);
  f_ = dict_.f_components(theta_);
  de_.resize(n_x());
  for (std::size_t a = 0; a < n_x(); ++a)
    for (std::size_t b = 0; b < n_x(); ++b) de_[a].push_back(derivative(e_[a], b));
}

Eigen::VectorXd ProjectiveModel::e(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_x()) throw DimensionError("e: state has wrong size");
  return eval_all(e_, as_span(x));
}

Eigen::MatrixXd ProjectiveModel::e_jacobian(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_x()) throw DimensionError("e_jacobian: state has wrong size");
  const auto n = static_cast<Eigen::Index>(n_x());
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      jac(a, b) = de_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)](as_span(x));
  return jac;
}

Eigen::VectorXd ProjectiveModel::f(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
  if (static_cast<std::size_t>(x.size()) != n_x() || static_cast<std::size_t>(w.size()) != n_w())
    throw DimensionError("f: state or input has wrong size");
  Eigen::VectorXd v(x.size() + w.size());
  v << x, w;
  return eval_all(f_, as_span(v));
}

Eigen::VectorXd solve_e(const ProjectiveModel& m, const Eigen::VectorXd& target, const Eigen::VectorXd& guess,
                        const NewtonOptions& opts) {
  const double tol = opts.tol * (1.0 + target.norm());
  Eigen::VectorXd x = guess;
  Eigen::VectorXd res = m.e(x) - target;
  double norm = res.norm();
  for (int it = 0; it < opts.max_iter && !(norm <= tol); ++it) {
    const Eigen::VectorXd dx = m.e_jacobian(x).partialPivLu().solve(-res);
    if (!dx.allFinite()) break;
    double s = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving, s *= 0.5) {
      const Eigen::VectorXd trial = x + s * dx;
      const Eigen::VectorXd trial_res = m.e(trial) - target;
      const double trial_norm = trial_res.norm();
      if (trial_norm < norm) {
        x = trial;
        res = trial_res;
        norm = trial_norm;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(norm <= tol))
    throw NewtonFailure("Newton iteration for e(x) = target did not converge", norm);
  // Polish: full steps while they still reduce the residual.
  for (int k = 0; k < 2 && norm > 0.0; ++k) {
    const Eigen::VectorXd trial = x + m.e_jacobian(x).partialPivLu().solve(-res);
    const Eigen::VectorXd trial_res = m.e(trial) - target;
    if (!(trial_res.norm() < norm)) break;
    x = trial;
    res = trial_res;
    norm = trial_res.norm();
  }
  return x;
}

Eigen::VectorXd step(const ProjectiveModel& m, const Eigen::VectorXd& x_prev, const Eigen::VectorXd& w,
                     const NewtonOptions& opts) {
  return solve_e(m, m.f(x_prev, w), x_prev, opts);
}

Stepper make_stepper(const ProjectiveModel& m, const NewtonOptions& opts) {
  return [&m, opts](const Eigen::VectorXd& x_prev, const Eigen::VectorXd& w) {
    return step(m, x_prev, w, opts);
  };
}

Eigen::MatrixXd simulate(const Stepper& a, const Eigen::VectorXd& x0, const Eigen::MatrixXd& w) {
  if (w.rows() < 1) throw DimensionError("simulate: input needs at least one row");
  Eigen::MatrixXd x(w.rows(), x0.size());
  x.row(0) = x0.transpose();
  Eigen::VectorXd prev = x0;
  for (Eigen::Index t = 1; t < w.rows(); ++t) {
    try {
      prev = a(prev, w.row(t).transpose());
    } catch (const NewtonFailure& e) {
      throw SimulationFailure(static_cast<std::size_t>(t), e.residual());
    }
    if (!prev.allFinite()) throw SimulationFailure(static_cast<std::size_t>(t), INFINITY);
    x.row(t) = prev.transpose();
  }
  return x;
}

Eigen::MatrixXd simulate(const ProjectiveModel& m, const Eigen::VectorXd& x0, const Eigen::MatrixXd& w) {
  if (static_cast<std::size_t>(x0.size()) != m.n_x() || static_cast<std::size_t>(w.cols()) != m.n_w())
    throw DimensionError("simulate: initial state or input has wrong dimension");
  return simulate(make_stepper(m), x0, w);
}

double sim_error(const Stepper& a, const Eigen::VectorXd& x0, const Eigen::MatrixXd& xtilde,
                 const Eigen::MatrixXd& wtilde, const Eigen::MatrixXd& c) {
  if (xtilde.rows() != wtilde.rows())
    throw DimensionError("sim_error: state and input sequences differ in length");
  if (xtilde.rows() < 2) throw DimensionError("sim_error: need T >= 1");
  if (c.cols() != xtilde.cols()) throw DimensionError("sim_error: C does not match state dimension");
  const Eigen::MatrixXd x = simulate(a, x0, wtilde);
  const Eigen::Index horizon = xtilde.rows() - 1;
  double sum = 0.0;
  for (Eigen::Index t = 0; t < horizon; ++t)
    sum += (c * (xtilde.row(t) - x.row(t)).transpose()).squaredNorm();
  return sum / static_cast<double>(horizon);
}

double sim_error(const ProjectiveModel& m, const Eigen::VectorXd& x0, const Eigen::MatrixXd& xtilde,
                 const Eigen::MatrixXd& wtilde, const Eigen::MatrixXd& c) {
  return sim_error(make_stepper(m), x0, xtilde, wtilde, c);
}

double mean_sim_error(const ProjectiveModel& m, const DataSet& ds) {
  double sum = 0.0;
  for (const auto& x : ds.states())
    sum += sim_error(m, x.row(0).transpose(), x, ds.input(), ds.output_map());
  return sum / static_cast<double>(ds.experiments());
}

SurrogatePair surrogate_from_gram(const Eigen::MatrixXd& R, const MonomialBasis& aleph) {
  const auto n = static_cast<Eigen::Index>(aleph.size());
  if (R.rows() != n || R.cols() != n) throw DimensionError("surrogate: R does not match degree set");
  Polynomial r(aleph.var_count());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      r.add_term(aleph[static_cast<std::size_t>(a)] + aleph[static_cast<std::size_t>(b)], R(a, b));
  return {std::move(r), R, aleph};
}

double jhat_r(const Polynomial& r, const DataSet& ds) {
  if (r.var_count() != ds.n_z()) throw DimensionError("jhat_r: r must read n_z variables");
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.experiments(); ++i)
    for (std::size_t t = 1; t <= ds.horizon(); ++t) sum += r(embed(ds, i, t));
  return sum / static_cast<double>(ds.experiments() * ds.horizon());
}

double fitted_rate(const std::vector<double>& energy) {
  if (energy.empty()) return 0.0;
  const double peak = *std::max_element(energy.begin(), energy.end());
  if (!(peak > 0.0)) return 0.0;
  const double floor = std::max(peak * 1e-24, 1e-300);
  std::vector<double> ts, logs;
  for (std::size_t t = 0; t < energy.size(); ++t) {
    if (!(energy[t] > floor)) break;
    ts.push_back(static_cast<double>(t));
    logs.push_back(std::log(energy[t]));
  }
  if (ts.size() < 2) return ts.size() == energy.size() ? 1.0 : 0.0;
  const double n = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    st += ts[k];
    sl += logs[k];
    stt += ts[k] * ts[k];
    stl += ts[k] * logs[k];
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  return std::exp(0.5 * slope);
}

ProbeReport stability_probe(const ProjectiveModel& m, const ProbeOptions& opts) {
  ProbeReport report;
  report.trials = opts.trials;
  const auto nx = static_cast<Eigen::Index>(m.n_x());
  const auto nw = static_cast<Eigen::Index>(m.n_w());
  const auto rows = static_cast<Eigen::Index>(opts.horizon + 1);
  for (std::size_t k = 0; k < opts.trials; ++k) {
    CounterRng gen(opts.seed, "probe[" + std::to_string(k) + "]");
    Eigen::MatrixXd w(rows, nw);
    for (Eigen::Index t = 0; t < rows; ++t)
      for (Eigen::Index d = 0; d < nw; ++d) w(t, d) = gen.uniform(-opts.input_range, opts.input_range);
    Eigen::VectorXd x0(nx), y0(nx);
    for (Eigen::Index d = 0; d < nx; ++d) x0(d) = gen.uniform(-opts.state_range, opts.state_range);
    for (Eigen::Index d = 0; d < nx; ++d) y0(d) = gen.uniform(-opts.state_range, opts.state_range);
    Eigen::MatrixXd xa, xb;
    try {
      xa = simulate(m, x0, w);
      xb = simulate(m, y0, w);
    } catch (const SimulationFailure&) {
      ++report.simulation_failures;
      continue;
    }
    std::vector<double> energy(static_cast<std::size_t>(rows));
    double head = 0.0, tail = 0.0;
    for (Eigen::Index t = 0; t < rows; ++t) {
      const double e = (xa.row(t) - xb.row(t)).squaredNorm();
      energy[static_cast<std::size_t>(t)] = e;
      (t >= rows / 2 ? tail : head) += e;
    }
    const double rate = fitted_rate(energy);
    report.rates.push_back(rate);
    report.max_rate = std::max(report.max_rate, rate);
    report.max_tail_energy = std::max(report.max_tail_energy, tail);
    if (tail > head) ++report.growing;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Files

namespace {

json degrees_to_json(const MonomialBasis& basis) {
  json out = json::array();
  for (const auto& a : basis) out.push_back(a.exponents());
  return out;
}

MonomialBasis degrees_from_json(const json& j) {
  std::vector<VectorDegree> out;
  for (const auto& e : j) out.emplace_back(e.get<std::vector<int>>());
  return MonomialBasis(std::move(out));
}

}  // namespace

std::string model_to_string(const ProjectiveModel& m, const std::optional<SurrogatePair>& surrogate) {
  json doc;
  doc["format"] = "stableid-model";
  doc["dictionary"] = detail::dictionary_to_json(m.dictionary());
  doc["theta"] = std::vector<double>(m.theta().data(), m.theta().data() + m.theta().size());
  doc["delta"] = m.delta();
  json prov;
  prov["algorithm"] = m.provenance.algorithm;
  prov["dataset_hash"] = m.provenance.dataset_hash;
  prov["seed"] = m.provenance.seed;
  prov["backend"] = m.provenance.backend;
  json config = json::parse(m.provenance.config, nullptr, false);
  prov["config"] = config.is_discarded() ? json(m.provenance.config) : config;
  doc["provenance"] = std::move(prov);
  if (surrogate) {
    doc["surrogate"] = {{"aleph", degrees_to_json(surrogate->aleph)},
                        {"R", detail::matrix_to_json(surrogate->R)}};
  }
  return doc.dump(1) + "\n";
}

void save_model(const ProjectiveModel& m, const std::filesystem::path& path,
                const std::optional<SurrogatePair>& surrogate) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << model_to_string(m, surrogate);
}

LoadedModel parse_model(const std::string& text) {
  const json doc = detail::parse_json(text);
  try {
    Dictionary dict = detail::dictionary_from_json(doc.at("dictionary"));
    const auto th = doc.at("theta").get<std::vector<double>>();
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
    LoadedModel out{ProjectiveModel(std::move(dict), std::move(theta), doc.value("delta", 0.0)), std::nullopt};
    if (doc.contains("provenance")) {
      const auto& p = doc["provenance"];
      out.model.provenance.algorithm = p.value("algorithm", std::string{});
      out.model.provenance.dataset_hash = p.value("dataset_hash", std::string{});
      out.model.provenance.seed = p.value("seed", std::uint64_t{0});
      out.model.provenance.backend = p.value("backend", std::string{});
      if (p.contains("config"))
        out.model.provenance.config = p["config"].is_string() ? p["config"].get<std::string>() : p["config"].dump();
    }
    if (doc.contains("surrogate")) {
      const auto& s = doc["surrogate"];
      out.surrogate = surrogate_from_gram(detail::matrix_from_json(s.at("R")), degrees_from_json(s.at("aleph")));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

void write_trajectory_csv(const Eigen::MatrixXd& x, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "t";
  for (Eigen::Index d = 0; d < x.cols(); ++d) out << ",x" << d + 1;
  out << '\n';
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    out << t;
    for (Eigen::Index d = 0; d < x.cols(); ++d) out << ',' << x(t, d);
    out << '\n';
  }
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError("non-numeric CSV field", line_no, 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("CSV row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(rows.front().size()),
                       line_no, 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("CSV holds no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix_csv(ss.str());
}

}  // namespace stableid
