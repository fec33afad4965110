// Command-line driver: data generation, single-dataset tests, replication
// studies, SCLT checks and density tables.

#include "pwtab/bandit_dist.hpp"
#include "pwtab/baselines.hpp"
#include "pwtab/csv_io.hpp"
#include "pwtab/dgp.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/harness.hpp"
#include "pwtab/meta_perm.hpp"
#include "pwtab/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

using namespace pwtab;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct GenerateArgs {
  std::string f = "I";
  std::string g = "I";
  double sigma_eps = 0.5;
  std::size_t n = 20000;
  double p_treat = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

struct TestArgs {
  std::string input;
  std::size_t k = 2;
  std::string learner = "gbt_a";
  double tau = 0.03;
  std::optional<double> lambda;
  std::size_t b = kDefaultPermutations;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string propensity = "fit";
  double clip_eps = kDefaultClipEps;
};

struct SimulateArgs {
  std::string config;
  std::map<std::string, std::string> flags;
  std::string out_json;
  std::string out_csv;
  std::string power_axis;
  std::string power_out;
};

struct ScltArgs {
  double mu = 0.0;
  double sigma = 1.0;
  double lambda = 0.0;
  std::size_t n = 2000;
  std::size_t reps = 10000;
  std::uint64_t seed = 0;
};

struct DensityArgs {
  double omega = 0.0;
  double sigma0 = 1.0;
  double grid_min = -5.0;
  double grid_max = 5.0;
  double grid_step = 0.1;
};

std::optional<double> parse_propensity(const std::string& value) {
  if (value == "fit") return std::nullopt;
  if (value.rfind("known:", 0) == 0) {
    std::size_t pos = 0;
    const std::string number = value.substr(6);
    double p = 0.0;
    try {
      p = std::stod(number, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != number.size()) throw DomainError("--propensity: bad probability '" + number + "'");
    return p;
  }
  throw DomainError("--propensity: expected 'fit' or 'known:<p>', got '" + value + "'");
}

// Writes to `path`, or stdout when empty or "-".
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
}

nlohmann::json baseline_json(const BaselineResult& r) {
  return {{"method", to_string(r.method)}, {"estimate", r.estimate},       {"variance", r.variance},
          {"z", r.z},                      {"p_one_sided", r.p_one_sided}, {"p_two_sided", r.p_two_sided}};
}

int run_generate(const GenerateArgs& args) {
  DgpConfig config;
  config.f_kind = parse_dgp_kind(args.f);
  config.g_kind = parse_dgp_kind(args.g);
  config.sigma_eps = args.sigma_eps;
  config.n = args.n;
  config.p_treat = args.p_treat;
  config.seed = args.seed;
  const Dataset data = generate(config);
  with_output(args.out, [&](std::ostream& out) { write_csv(data, out); });
  return 0;
}

int run_test(const TestArgs& args) {
  if (!(args.alpha > 0.0 && args.alpha < 1.0)) throw DomainError("--alpha must lie in (0, 1)");

  PwtabConfig config;
  config.estimator.learner = LearnerSpec::make(parse_learner_kind(args.learner));
  config.estimator.folds = args.k;
  config.estimator.known_propensity = parse_propensity(args.propensity);
  config.estimator.clip_eps = args.clip_eps;
  config.permutations = args.b;
  config.lambda.tau = args.tau;
  if (args.lambda) {
    config.lambda.mode = LambdaMode::fixed;
    config.lambda.lambda = *args.lambda;
  }
  config.lambda.validate();
  config.estimator.learner.validate();

  Dataset data = ingest_csv(args.input);
  data.validate();

  std::vector<double> levels = kReportLevels;
  if (std::find(levels.begin(), levels.end(), args.alpha) == levels.end()) levels.push_back(args.alpha);
  const TestReport report = pwtab_test(data, config, args.seed, levels);

  // zDML on the same pseudo-outcomes as the test.
  const PseudoOutcomes pseudo = estimate_pseudo_outcomes(data, config.estimator, derive_seed(args.seed, {0}));

  nlohmann::json j;
  j["n"] = report.n;
  j["ate_estimate"] = report.ate_estimate;
  j["sigma_hat"] = report.sigma_hat;
  j["lambda"] = report.lambda_used;
  j["permutations"] = report.per_perm_stats.size();
  j["per_perm_stats"] = report.per_perm_stats;
  j["per_perm_p"] = report.per_perm_p;
  j["cauchy_stat"] = report.cauchy_stat;
  j["p_value"] = report.p_aggregated;
  j["alpha"] = args.alpha;
  j["reject"] = report.p_aggregated <= args.alpha;
  nlohmann::json decisions = nlohmann::json::object();
  for (const auto& [level, reject] : report.decision_at) decisions[format_double(level)] = reject;
  j["decision_at"] = decisions;
  j["baselines"] = {baseline_json(dim_test(data)), baseline_json(cuped_test(data)),
                    baseline_json(zdml_test(pseudo))};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_simulate(const SimulateArgs& args) {
  std::map<std::string, std::string> options;
  if (!args.config.empty()) options = read_config_file(args.config);
  for (const auto& [key, value] : args.flags) options[key] = value;
  ExperimentGrid grid;
  apply_options(grid, options);
  grid.validate();

  const StudyReport report = run_study(grid);
  const nlohmann::json j = to_json(report);
  with_output(args.out_json, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  if (!args.out_csv.empty()) {
    with_output(args.out_csv, [&](std::ostream& out) { write_study_csv(report, out); });
  }
  if (!args.power_axis.empty()) {
    const PowerAxis axis = parse_power_axis(args.power_axis);
    with_output(args.power_out, [&](std::ostream& out) { emit_power_curves(report, axis, out); });
  }
  return 0;
}

int run_sclt(const ScltArgs& args) {
  const ScltReport report = run_sclt_check(args.mu, args.sigma, args.lambda, args.n, args.reps, args.seed);
  std::cout << to_json(report).dump(2) << '\n';
  return 0;
}

int run_density(const DensityArgs& args) {
  BanditParams params{args.omega, args.sigma0};
  params.validate();
  if (!(args.grid_step > 0.0) || !(args.grid_max >= args.grid_min)) {
    throw DomainError("density grid needs grid-step > 0 and grid-max >= grid-min");
  }
  const auto steps = static_cast<std::size_t>(std::floor((args.grid_max - args.grid_min) / args.grid_step + 1e-9));
  std::cout << "y,f,F,tail\n";
  for (std::size_t i = 0; i <= steps; ++i) {
    const double y = args.grid_min + static_cast<double>(i) * args.grid_step;
    std::cout << format_double(y) << ',' << format_double(bandit_density(y, params)) << ','
              << format_double(bandit_cdf(y, params)) << ','
              << format_double(bandit_tail_prob(std::abs(y), params)) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permuted weighted two-armed bandit A/B testing toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic randomized trial as CSV");
  generate_cmd->add_option("--f", gen.f, "Baseline function I..IV");
  generate_cmd->add_option("--g", gen.g, "Effect function I..IV");
  generate_cmd->add_option("--sigma-eps", gen.sigma_eps, "Noise standard deviation");
  generate_cmd->add_option("--n", gen.n, "Number of subjects");
  generate_cmd->add_option("--p-treat", gen.p_treat, "Treatment probability");
  generate_cmd->add_option("--seed", gen.seed, "Random seed");
  generate_cmd->add_option("--out", gen.out, "Output path (stdout if omitted)");

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "Run the permuted bandit test on a CSV dataset");
  test_cmd->add_option("--input", test.input, "Dataset CSV")->required();
  test_cmd->add_option("--k", test.k, "Cross-fitting folds");
  test_cmd->add_option("--learner", test.learner, "gbt_a|gbt_b|linear|stacking");
  test_cmd->add_option("--tau", test.tau, "Threshold for the lambda rule");
  test_cmd->add_option("--lambda", test.lambda, "Fixed lambda (overrides --tau)");
  test_cmd->add_option("--b", test.b, "Number of permutations");
  test_cmd->add_option("--seed", test.seed, "Random seed");
  test_cmd->add_option("--alpha", test.alpha, "Significance level");
  test_cmd->add_option("--propensity", test.propensity, "known:<p> or fit");
  test_cmd->add_option("--clip-eps", test.clip_eps, "Propensity clipping bound");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Replication study over a DGP grid");
  simulate_cmd->add_option("--config", sim.config, "key = value manifest; flags override it");
  std::map<std::string, std::string> sim_values;
  for (const char* key : {"f", "g", "sigma-eps", "n", "p-treat", "methods", "reps", "alpha", "learner", "folds",
                          "clip-eps", "propensity", "tau", "permutations", "seed", "threads"}) {
    simulate_cmd->add_option(std::string("--") + key, sim_values[key]);
  }
  simulate_cmd->add_option("--out-json", sim.out_json, "Report JSON path (stdout if omitted)");
  simulate_cmd->add_option("--out-csv", sim.out_csv, "Per-cell CSV path");
  simulate_cmd->add_option("--power-axis", sim.power_axis, "sigma_eps|n|f|g");
  simulate_cmd->add_option("--power-out", sim.power_out, "Power-curve CSV path (stdout if omitted)");

  ScltArgs sclt;
  auto* sclt_cmd = app.add_subcommand("sclt-check", "Monte Carlo check of the limiting distribution");
  sclt_cmd->add_option("--mu", sclt.mu);
  sclt_cmd->add_option("--sigma", sclt.sigma);
  sclt_cmd->add_option("--lambda", sclt.lambda);
  sclt_cmd->add_option("--n", sclt.n);
  sclt_cmd->add_option("--reps", sclt.reps);
  sclt_cmd->add_option("--seed", sclt.seed);

  DensityArgs dens;
  auto* density_cmd = app.add_subcommand("density", "Tabulate density, CDF and tail of B(omega, sigma0)");
  density_cmd->add_option("--omega", dens.omega);
  density_cmd->add_option("--sigma0", dens.sigma0);
  density_cmd->add_option("--grid-min", dens.grid_min);
  density_cmd->add_option("--grid-max", dens.grid_max);
  density_cmd->add_option("--grid-step", dens.grid_step);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*generate_cmd) return run_generate(gen);
    if (*test_cmd) return run_test(test);
    if (*simulate_cmd) {
      for (const auto& [key, value] : sim_values) {
        if (simulate_cmd->count(std::string("--") + key) > 0) sim.flags[key] = value;
      }
      return run_simulate(sim);
    }
    if (*sclt_cmd) return run_sclt(sclt);
    if (*density_cmd) return run_density(dens);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
