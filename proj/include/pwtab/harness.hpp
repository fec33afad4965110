#pragma once

// Replication studies over synthetic trials, SCLT Monte Carlo checks and
// report emission.

#include "pwtab/dgp.hpp"
#include "pwtab/dr_engine.hpp"
#include "pwtab/tab_statistic.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pwtab {

enum class Method { pwtab, wtab, zdml, cuped, dim };

inline const std::vector<Method> kAllMethods{Method::pwtab, Method::wtab, Method::zdml,
                                             Method::cuped, Method::dim};

std::string to_string(Method method);
Method parse_method(std::string_view name);
bool needs_pseudo_outcomes(Method method) noexcept;

struct ExperimentGrid {
  std::vector<DgpKind> f_kinds{DgpKind::I};
  std::vector<DgpKind> g_kinds{DgpKind::I};
  std::vector<double> sigma_eps{0.5};
  std::vector<std::size_t> sizes{20000};
  double p_treat = 0.5;
  std::vector<Method> methods = kAllMethods;
  std::size_t replications = 500;
  double alpha = 0.05;
  // Unless fit_propensity is set, run_study fills an unset
  // estimator.known_propensity with p_treat.
  CounterfactualConfig estimator;
  bool fit_propensity = false;
  double tau = 0.03;
  std::size_t permutations = 25;
  std::uint64_t root_seed = 20240601;
  std::size_t threads = 0;  // 0: worker_count()

  void validate() const;
};

struct CellKey {
  DgpKind f_kind = DgpKind::I;
  DgpKind g_kind = DgpKind::I;
  double sigma_eps = 0.5;
  std::size_t n = 0;
};

struct MethodSummary {
  Method method = Method::dim;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  double stderr_rate = 0.0;
  double estimate_mean = 0.0;
  double estimate_variance = 0.0;
  // p-value per completed replication, in replication order.
  std::vector<double> p_values;
  std::vector<double> estimates;
};

struct CellReport {
  CellKey key;
  double true_ate = 0.0;
  std::vector<MethodSummary> methods;

  const MethodSummary& at(Method method) const;
};

struct StudyReport {
  ExperimentGrid grid;
  std::vector<CellReport> cells;
  double runtime_seconds = 0.0;
};

// Worker pool size: BANDIT_AB_THREADS if set to a positive integer, else
// std::thread::hardware_concurrency().
std::size_t worker_count();

// Calls fn(i) for i in [0, count) on up to `workers` threads. Rethrows the
// first exception after all workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Seed of replication `rep` in the cell `key`; depends only on coordinates.
std::uint64_t replication_seed(std::uint64_t root, const CellKey& key, std::size_t rep) noexcept;

StudyReport run_study(const ExperimentGrid& grid);

nlohmann::json to_json(const ExperimentGrid& grid);
nlohmann::json to_json(const StudyReport& report);
void write_study_csv(const StudyReport& report, std::ostream& out);

enum class PowerAxis { sigma_eps, n, f, g };
PowerAxis parse_power_axis(std::string_view name);

// Long format `method,axis_value,rejection_rate,stderr`, sorted by method
// then axis value.
void emit_power_curves(const StudyReport& report, PowerAxis axis, std::ostream& out);

struct ScltReport {
  double mu = 0.0;
  double sigma = 1.0;
  double lambda = 0.0;
  std::size_t n = 0;
  std::size_t reps = 0;
  double omega = 0.0;
  double sigma0 = 1.0;
  double ks_distance = 0.0;
  double critical_value = 0.0;  // z_{0.975}
  double empirical_tail = 0.0;  // fraction of |T| > critical_value
  double theoretical_tail = 0.0;
  // sigma / ((1 - lambda) sqrt(n)); the KS comparison is only meaningful
  // when this is small.
  double rate_bound = 0.0;
  bool asserted = false;
};

inline constexpr double kScltRateLimit = 0.05;

// Simulates `reps` oracle runs with IID N(mu, sigma^2) rewards through the
// optimal policy and compares the final statistic with B(omega_n, sigma0).
ScltReport run_sclt_check(double mu, double sigma, double lambda, std::size_t n,
                          std::size_t reps, std::uint64_t seed, std::size_t threads = 0);

nlohmann::json to_json(const ScltReport& report);

// Flat `key = value` manifest; '#' starts a comment. Keys mirror the long
// CLI flag names without the leading dashes.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config(std::istream& in);

// Applies manifest/CLI keys onto `grid`. Throws DomainError on an unknown key
// or malformed value.
void apply_options(ExperimentGrid& grid, const std::map<std::string, std::string>& options);

}  // namespace pwtab
