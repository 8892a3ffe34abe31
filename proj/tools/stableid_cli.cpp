// Command-line front end: data generation, identification, simulation,
// the benchmark comparison and the excitation diagnostic.

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stableid/algorithms.hpp"
#include "stableid/dictionary.hpp"
#include "stableid/errors.hpp"
#include "stableid/harness.hpp"
#include "stableid/moments.hpp"

using namespace stableid;

namespace {

double parse_kappa(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("kappa must be 'inf' or a number");
  return v;
}

std::optional<int> parse_pi_degree(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  const int d = std::stoi(text, &used);
  if (used != text.size()) throw std::invalid_argument("pi-degree must be 'auto' or an integer");
  return d;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// "benchmark", "linear", "poly:<e degree>,<f state degree>,<f input degree>"
// or a dictionary file.
Dictionary choose_dictionary(const std::string& spec, const DataSet& ds) {
  if (spec == "auto") return ds.n_x() == 1 && ds.n_w() == 1 ? benchmark_dictionary() : linear_dictionary(ds.n_x(), ds.n_w());
  if (spec == "benchmark") return benchmark_dictionary();
  if (spec == "linear") return linear_dictionary(ds.n_x(), ds.n_w());
  if (spec.rfind("poly:", 0) == 0) {
    const Eigen::VectorXd d = parse_vector(spec.substr(5));
    if (d.size() != 3) throw std::invalid_argument("poly dictionary needs three degrees");
    return monomial_dictionary(ds.n_x(), ds.n_w(), static_cast<int>(d(0)), static_cast<int>(d(1)),
                               static_cast<int>(d(2)));
  }
  std::ifstream f(spec);
  if (!f) throw std::runtime_error("cannot open dictionary '" + spec + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_dictionary(buf.str());
}

std::vector<std::size_t> parse_horizons(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

std::vector<Algorithm> parse_algorithms(const std::string& text) {
  std::vector<Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_algorithm(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable nonlinear system identification from linearized moments"};
  app.require_subcommand(1);

  // gen-example
  std::size_t gen_T = 200, gen_trials = 10;
  double gen_noise = 0.3, gen_truncate = 0.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-example", "Simulate the benchmark system and write noisy trials");
  gen->add_option("--T", gen_T, "Signal length")->required();
  gen->add_option("--trials", gen_trials, "Number of noisy experiments")->required();
  gen->add_option("--noise-std", gen_noise, "Measurement noise standard deviation")->required();
  gen->add_option("--seed", gen_seed, "Seed")->required();
  gen->add_option("--truncate-sigmas", gen_truncate, "Clip noise at this many deviations (0 = off)");
  gen->add_option("--out", gen_out, "Data set JSON")->required();

  // identify
  std::string id_data, id_algo = "A", id_kappa = "inf", id_pi = "auto", id_out, id_dict = "auto";
  double id_delta = 0.01;
  std::optional<double> id_eps;
  bool id_verbose = false;
  auto* ident = app.add_subcommand("identify", "Identify a model from a data set");
  ident->add_option("--data", id_data, "Data set JSON")->required();
  ident->add_option("--algo", id_algo, "A, ls or mls")->required();
  ident->add_option("--delta", id_delta, "Strong monotonicity margin");
  ident->add_option("--kappa", id_kappa, "Norm bound, 'inf' for none");
  ident->add_option("--eps", id_eps, "Dissipation margin (defaults to delta)");
  ident->add_option("--pi-degree", id_pi, "Gram basis degree or 'auto'");
  ident->add_option("--dictionary", id_dict, "auto, benchmark, linear, poly:e,fx,fw or a dictionary file");
  ident->add_option("--out", id_out, "Model file")->required();
  ident->add_flag("--verbose", id_verbose, "Print solver iterations");

  // simulate
  std::string sim_model, sim_input, sim_x0, sim_out;
  auto* sim = app.add_subcommand("simulate", "Simulate a model on an input sequence");
  sim->add_option("--model", sim_model, "Model file")->required();
  sim->add_option("--input", sim_input, "Input CSV, one row per time index")->required();
  sim->add_option("--x0", sim_x0, "Initial state, comma separated")->required();
  sim->add_option("--out", sim_out, "Trajectory CSV")->required();

  // compare
  BenchmarkSpec spec;
  std::string cmp_horizons = "100,200,400,800", cmp_out, cmp_summary, cmp_algos = "A,ls,mls", cmp_kappa = "inf";
  bool cmp_quiet = false;
  auto* cmp = app.add_subcommand("compare", "Run the benchmark comparison of all estimators");
  cmp->add_option("--realizations", spec.realizations, "Independent realizations");
  cmp->add_option("--horizons", cmp_horizons, "Comma separated, increasing");
  cmp->add_option("--seed", spec.seed, "Seed");
  cmp->add_option("--trials", spec.trials, "Noisy experiments per realization");
  cmp->add_option("--noise-std", spec.noise_std, "Measurement noise standard deviation");
  cmp->add_option("--truncate-sigmas", spec.truncate_sigmas, "Clip noise at this many deviations (0 = off)");
  cmp->add_option("--delta", spec.config.delta, "Strong monotonicity margin");
  cmp->add_option("--kappa", cmp_kappa, "Norm bound, 'inf' for none");
  cmp->add_option("--algos", cmp_algos, "Comma separated subset of A,ls,mls");
  cmp->add_option("--threads", spec.threads, "Worker threads (0 = hardware)");
  cmp->add_option("--out", cmp_out, "Result CSV")->required();
  cmp->add_option("--summary", cmp_summary, "Summary CSV")->required();
  cmp->add_flag("--quiet", cmp_quiet, "No progress lines");

  // diagnose-pe
  std::string pe_data;
  int pe_degree = 1;
  std::string pe_horizons;
  auto* pe = app.add_subcommand("diagnose-pe", "Persistence of excitation over growing horizons");
  pe->add_option("--data", pe_data, "Data set JSON")->required();
  pe->add_option("--aleph-degree", pe_degree, "Degree of the monomial set over z")->required();
  pe->add_option("--horizons", pe_horizons, "Comma separated (default: T/8, T/4, T/2, T)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ExampleData ex = gen_example_data(gen_T, gen_trials, gen_noise, gen_seed, gen_truncate);
      save_dataset(ex.data, gen_out);
      std::cout << "wrote " << gen_trials << " trials of length " << gen_T << " to " << gen_out << '\n';
    } else if (*ident) {
      const DataSet ds = load_dataset(id_data);
      const Dictionary dict = choose_dictionary(id_dict, ds);
      IdentConfig cfg;
      cfg.delta = id_delta;
      cfg.kappa = parse_kappa(id_kappa);
      cfg.eps = id_eps;
      cfg.pi_degree = parse_pi_degree(id_pi);
      cfg.solver.verbose = id_verbose;
      const Algorithm algo = parse_algorithm(id_algo);
      const IdentResult res = identify(algo, ds, dict, cfg);
      save_model(res.model, id_out, res.surrogate);
      std::cout << "status " << to_string(res.status) << ", objective " << res.objective << ", iterations "
                << res.iterations << ", " << res.wall_ms << " ms\n";
      if (std::isfinite(res.jhat)) std::cout << "surrogate average " << res.jhat << '\n';
      std::cout << res.report.summary() << '\n';
    } else if (*sim) {
      const LoadedModel lm = load_model(sim_model);
      const Eigen::MatrixXd w = load_matrix_csv(sim_input);
      const Eigen::MatrixXd x = simulate(lm.model, parse_vector(sim_x0), w);
      write_trajectory_csv(x, sim_out);
      std::cout << "wrote " << x.rows() << " samples to " << sim_out << '\n';
    } else if (*cmp) {
      spec.horizons = parse_horizons(cmp_horizons);
      spec.algorithms = parse_algorithms(cmp_algos);
      spec.config.kappa = parse_kappa(cmp_kappa);
      const auto rows = run_comparison(spec, [&](const ResultRow& r) {
        if (!cmp_quiet)
          std::fprintf(stderr, "%-3s T=%-4zu seed=%llu err=%.4g %s %.0f ms\n", std::string(to_string(r.algo)).c_str(),
                       r.horizon, static_cast<unsigned long long>(r.seed), r.norm_sim_err, r.status.c_str(), r.wall_ms);
      });
      write_text(cmp_out, results_to_csv(rows));
      const std::string summary = summary_to_csv(summarize(rows));
      write_text(cmp_summary, summary);
      std::cout << summary;
    } else if (*pe) {
      const DataSet ds = load_dataset(pe_data);
      const MonomialBasis aleph = basis_up_to_degree(ds.n_z(), pe_degree);
      const std::size_t T = ds.horizon();
      std::vector<std::size_t> horizons =
          pe_horizons.empty() ? std::vector<std::size_t>{T / 8, T / 4, T / 2, T - 1} : parse_horizons(pe_horizons);
      std::erase(horizons, 0);
      std::cout << "horizon,min_eigenvalue,max_eigenvalue\n";
      for (const auto& p : persistence_diagnostic(ds.state(0), ds.input(), aleph, horizons))
        std::cout << p.horizon << ',' << p.min_eigenvalue << ',' << p.max_eigenvalue << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
