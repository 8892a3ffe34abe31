#include "stableid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stableid/errors.hpp"
#include "stableid/rng.hpp"

namespace stableid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double e0(double x) { return x + std::pow(x, 5) / 5.0; }

// w(t) = u(t-1) for t >= 1, row 0 zero.
Eigen::MatrixXd shifted_input(const Eigen::VectorXd& u) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(u.size(), 1);
  for (Eigen::Index t = 1; t < u.size(); ++t) w(t, 0) = u(t - 1);
  return w;
}

Eigen::VectorXd uniform_input(std::uint64_t seed, std::string_view stream, std::size_t horizon) {
  CounterRng rng(seed, stream);
  Eigen::VectorXd u(static_cast<Eigen::Index>(horizon + 1));
  for (Eigen::Index t = 0; t < u.size(); ++t) u(t) = rng.uniform(-1.0, 1.0);
  u(u.size() - 1) = 0.0;
  return u;
}

Eigen::MatrixXd true_response(const Eigen::MatrixXd& w) {
  return simulate(true_stepper(), Eigen::VectorXd::Zero(1), w);
}

std::string failure_status(const IdentificationError& e) {
  return std::string(e.what()).find("constraint set is empty") != std::string::npos ? "infeasible"
                                                                                     : "solver-failure";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

double true_e_inverse(double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("true_e_inverse: non-finite right-hand side");
  double lo = -(std::abs(rhs) + 1.0), hi = std::abs(rhs) + 1.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (e0(mid) < rhs ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int k = 0; k < 3; ++k) {
    const double step = (e0(x) - rhs) / (1.0 + std::pow(x, 4));
    if (!std::isfinite(step)) break;
    x -= step;
  }
  return x;
}

double true_step(double x_prev, double w) { return true_e_inverse(std::pow(x_prev, 3) / 3.0 + 5.0 * w); }

Stepper true_stepper() {
  return [](const Eigen::VectorXd& x_prev, const Eigen::VectorXd& w) {
    return Eigen::VectorXd::Constant(1, true_step(x_prev(0), w(0)));
  };
}

ExampleData gen_example_data(std::size_t horizon, std::size_t trials, double noise_std, std::uint64_t seed,
                             double truncate_sigmas) {
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("noise std must be >= 0");
  ExampleData out;
  const Eigen::VectorXd u = uniform_input(seed, "train-input", horizon);
  out.input = u;
  const Eigen::MatrixXd w = shifted_input(u);
  out.truth = true_response(w);
  std::vector<Eigen::MatrixXd> states;
  for (std::size_t i = 0; i < trials; ++i) {
    CounterRng rng(seed, "noise/" + std::to_string(i));
    Eigen::MatrixXd x = out.truth;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      double v = rng.normal();
      if (truncate_sigmas > 0.0) v = std::clamp(v, -truncate_sigmas, truncate_sigmas);
      x(t, 0) += noise_std * v;
    }
    states.push_back(std::move(x));
  }
  out.data = DataSet(w, std::move(states));
  return out;
}

double validate(const Stepper& model, std::uint64_t seed, std::size_t horizon) {
  const Eigen::MatrixXd w = shifted_input(uniform_input(seed, "validation-input", horizon));
  const Eigen::MatrixXd truth = true_response(w);
  const Eigen::MatrixXd xh = simulate(model, Eigen::VectorXd::Zero(1), w);
  const double den = truth.squaredNorm();
  if (den == 0.0) throw std::invalid_argument("validation response is identically zero");
  return (truth - xh).squaredNorm() / den;
}

double validate(const ProjectiveModel& model, std::uint64_t seed, std::size_t horizon) {
  return validate(make_stepper(model), seed, horizon);
}

double sup_grid_error(const Stepper& model, std::size_t nx_points, std::size_t nw_points) {
  if (nx_points < 2 || nw_points < 2) throw std::invalid_argument("grid needs at least two points per axis");
  double worst = 0.0;
  for (std::size_t i = 0; i < nx_points; ++i)
    for (std::size_t j = 0; j < nw_points; ++j) {
      const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(nx_points - 1);
      const double w = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(nw_points - 1);
      const double a = model(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, w))(0);
      worst = std::max(worst, std::abs(a - true_step(x, w)));
    }
  return worst;
}

void BenchmarkSpec::validate() const {
  if (horizons.empty()) throw std::invalid_argument("at least one horizon is required");
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    if (horizons[k] == 0) throw std::invalid_argument("horizons must be positive");
    if (k && horizons[k] <= horizons[k - 1]) throw std::invalid_argument("horizons must be increasing");
  }
  if (realizations == 0) throw std::invalid_argument("realizations must be positive");
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise std must be >= 0");
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  config.validate();
}

std::uint64_t BenchmarkSpec::realization_seed(std::size_t k) const {
  return splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (k + 1)));
}

std::vector<ResultRow> run_comparison(const BenchmarkSpec& spec,
                                      const std::function<void(const ResultRow&)>& progress) {
  spec.validate();
  const Dictionary dict = benchmark_dictionary();
  const std::size_t per_realization = spec.horizons.size() * spec.algorithms.size();
  std::vector<ResultRow> rows(spec.realizations * per_realization);
  std::mutex sink;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < spec.realizations; k = next++) {
      const std::uint64_t seed = spec.realization_seed(k);
      const ExampleData ex = gen_example_data(spec.horizons.back(), spec.trials, spec.noise_std, seed,
                                              spec.truncate_sigmas);
      std::size_t slot = k * per_realization;
      for (std::size_t T : spec.horizons) {
        const DataSet ds = ex.data.truncated(T);
        for (Algorithm algo : spec.algorithms) {
          ResultRow row{algo, T, seed, kNaN, "ok", 0.0, kNaN, kNaN, false, kNaN};
          const auto start = std::chrono::steady_clock::now();
          try {
            IdentConfig cfg = spec.config;
            cfg.seed = seed;
            const IdentResult res = identify(algo, ds, dict, cfg);
            const Stepper a = make_stepper(res.model);
            row.norm_sim_err = validate(a, seed, T);
            row.sup_grid_err = sup_grid_error(a);
            if (std::isfinite(res.jhat)) row.bound_gap = res.jhat - mean_sim_error(res.model, ds);
            ProbeOptions po;
            po.seed = seed;
            po.state_range = 2.0;
            const ProbeReport probe = stability_probe(res.model, po);
            row.probe_passed = probe.passed();
            row.probe_rate = probe.max_rate;
          } catch (const IdentificationError& e) {
            row.status = failure_status(e);
          } catch (const SimulationFailure&) {
            row.status = "simulation-failure";
            row.norm_sim_err = row.sup_grid_err = kNaN;
          } catch (const std::exception&) {
            row.status = "error";
            row.norm_sim_err = row.sup_grid_err = kNaN;
          }
          row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
          std::lock_guard<std::mutex> lock(sink);
          rows[slot++] = row;
          if (progress) progress(row);
        }
      }
    }
  };

  std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, spec.realizations);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> errors;
  for (const ResultRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SummaryRow& s) { return s.algo == r.algo && s.horizon == r.horizon; });
    if (it == out.end()) {
      out.push_back(SummaryRow{r.algo, r.horizon});
      errors.emplace_back();
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    ++it->count;
    if (r.status != "ok") {
      ++it->failures;
      continue;
    }
    errors[k].push_back(r.norm_sim_err);
    if (r.norm_sim_err > 10.0) ++it->above_10;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].median = quantile(errors[k], 0.5);
    out[k].q1 = quantile(errors[k], 0.25);
    out[k].q3 = quantile(errors[k], 0.75);
  }
  std::sort(out.begin(), out.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return a.algo != b.algo ? a.algo < b.algo : a.horizon < b.horizon;
  });
  return out;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "algo,horizon,seed,norm_sim_err,status,wall_ms\n";
  for (const ResultRow& r : rows)
    os << to_string(r.algo) << ',' << r.horizon << ',' << r.seed << ',' << format_double(r.norm_sim_err) << ','
       << r.status << ',' << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat << '\n';
  return os.str();
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "algo,horizon,count,median,q1,q3,failures,above_10\n";
  for (const SummaryRow& s : rows)
    os << to_string(s.algo) << ',' << s.horizon << ',' << s.count << ',' << format_double(s.median) << ','
       << format_double(s.q1) << ',' << format_double(s.q3) << ',' << s.failures << ',' << s.above_10 << '\n';
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace stableid
