#include "pwtab/harness.hpp"

#include "pwtab/bandit_dist.hpp"
#include "pwtab/baselines.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/meta_perm.hpp"
#include "pwtab/normal.hpp"
#include "pwtab/rng.hpp"
#include "pwtab/stats.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace pwtab {

std::string to_string(Method method) {
  switch (method) {
    case Method::pwtab: return "PWTAB";
    case Method::wtab: return "WTAB";
    case Method::zdml: return "zDML";
    case Method::cuped: return "CUPED";
    case Method::dim: return "DIM";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "pwtab") return Method::pwtab;
  if (lower == "wtab") return Method::wtab;
  if (lower == "zdml" || lower == "z-dml") return Method::zdml;
  if (lower == "cuped") return Method::cuped;
  if (lower == "dim") return Method::dim;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

bool needs_pseudo_outcomes(Method method) noexcept {
  return method == Method::pwtab || method == Method::wtab || method == Method::zdml;
}

void ExperimentGrid::validate() const {
  if (f_kinds.empty() || g_kinds.empty() || sigma_eps.empty() || sizes.empty()) {
    throw DomainError("ExperimentGrid: every DGP axis needs at least one value");
  }
  if (replications < 1) throw DomainError("ExperimentGrid: replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ExperimentGrid: alpha must lie in (0, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("ExperimentGrid: tau must be positive");
  if (permutations < 1) throw DomainError("ExperimentGrid: permutations must be >= 1");
  if (estimator.folds < 2) throw DomainError("ExperimentGrid: folds must be >= 2");
  for (double s : sigma_eps) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("ExperimentGrid: sigma_eps must be >= 0");
  }
  for (std::size_t n : sizes) {
    if (n < 2 * estimator.folds) throw DomainError("ExperimentGrid: n too small for the fold count");
  }
  if (!(p_treat > 0.0 && p_treat < 1.0)) throw DomainError("ExperimentGrid: p_treat must lie in (0, 1)");
  // Learners are only built for methods that need pseudo-outcomes.
  if (std::any_of(methods.begin(), methods.end(), needs_pseudo_outcomes)) estimator.learner.validate();
}

const MethodSummary& CellReport::at(Method method) const {
  for (const auto& m : methods) {
    if (m.method == method) return m;
  }
  throw DomainError("method " + to_string(method) + " not in this cell");
}

std::size_t worker_count() {
  if (const char* env = std::getenv("BANDIT_AB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t replication_seed(std::uint64_t root, const CellKey& key, std::size_t rep) noexcept {
  return derive_seed(root, {static_cast<std::uint64_t>(key.f_kind), static_cast<std::uint64_t>(key.g_kind),
                            std::bit_cast<std::uint64_t>(key.sigma_eps), static_cast<std::uint64_t>(key.n),
                            static_cast<std::uint64_t>(rep)});
}

namespace {

struct Outcome {
  bool ok = false;
  double p_value = 1.0;
  double estimate = 0.0;
};

// Results of one replication, one slot per grid method.
using RepOutcome = std::vector<Outcome>;

template <class F>
Outcome guarded(F&& f) {
  try {
    return f();
  } catch (const DegenerateVarianceError&) {
  } catch (const FoldError&) {
  } catch (const DomainError&) {
    // The grid is validated up front, so this is a data defect of this
    // replication (e.g. an arm too small).
  }
  return Outcome{};
}

RepOutcome run_replication(const ExperimentGrid& grid, const CellKey& key, std::size_t rep) {
  const std::uint64_t seed = replication_seed(grid.root_seed, key, rep);
  DgpConfig dgp;
  dgp.f_kind = key.f_kind;
  dgp.g_kind = key.g_kind;
  dgp.sigma_eps = key.sigma_eps;
  dgp.n = key.n;
  dgp.p_treat = grid.p_treat;
  dgp.seed = derive_seed(seed, {0});
  const Dataset data = generate(dgp);

  // Pseudo-outcomes are shared by PWTAB, WTAB and zDML; built on first use.
  std::optional<PseudoOutcomes> pseudo;
  bool pseudo_failed = false;
  auto get_pseudo = [&]() -> const PseudoOutcomes* {
    if (!pseudo && !pseudo_failed) {
      try {
        pseudo = estimate_pseudo_outcomes(data, grid.estimator, derive_seed(seed, {1}));
        if (pseudo->sigma_hat == 0.0) {
          pseudo.reset();
          pseudo_failed = true;
        }
      } catch (const DegenerateVarianceError&) {
        pseudo_failed = true;
      } catch (const FoldError&) {
        pseudo_failed = true;
      } catch (const DomainError&) {
        pseudo_failed = true;
      }
    }
    return pseudo ? &*pseudo : nullptr;
  };

  RepOutcome out(grid.methods.size());
  for (std::size_t m = 0; m < grid.methods.size(); ++m) {
    const Method method = grid.methods[m];
    out[m] = guarded([&]() -> Outcome {
      Outcome o;
      if (needs_pseudo_outcomes(method)) {
        const PseudoOutcomes* p = get_pseudo();
        if (!p) return o;
        const double lambda = select_lambda_threshold(p->sigma_hat, p->size(), grid.tau);
        if (method == Method::zdml) {
          o.p_value = zdml_test(*p).p_two_sided;
        } else if (method == Method::wtab) {
          const PolicyTrace trace = run_optimal_policy(*p, lambda, derive_seed(seed, {2}));
          o.p_value = statistic_p_value(trace.statistic());
        } else {
          const PermutationPlan plan = PermutationPlan::make(p->size(), grid.permutations, derive_seed(seed, {3}));
          o.p_value = pwtab_from_pseudo(*p, lambda, plan, derive_seed(seed, {4})).p_aggregated;
        }
        o.estimate = p->mean;
      } else {
        const BaselineResult r = method == Method::dim ? dim_test(data) : cuped_test(data);
        o.p_value = r.p_two_sided;
        o.estimate = r.estimate;
      }
      o.ok = true;
      return o;
    });
  }
  return out;
}

MethodSummary summarize(Method method, std::size_t slot, const std::vector<RepOutcome>& reps, double alpha) {
  MethodSummary s;
  s.method = method;
  for (const auto& rep : reps) {
    const Outcome& o = rep[slot];
    if (!o.ok) {
      ++s.failed;
      continue;
    }
    ++s.completed;
    if (o.p_value <= alpha) ++s.rejections;
    s.p_values.push_back(o.p_value);
    s.estimates.push_back(o.estimate);
  }
  if (s.completed > 0) {
    const double k = static_cast<double>(s.completed);
    s.rejection_rate = static_cast<double>(s.rejections) / k;
    s.stderr_rate = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / k);
    s.estimate_mean = mean(s.estimates);
    s.estimate_variance = s.completed > 1 ? sample_variance(s.estimates) : 0.0;
  }
  return s;
}

}  // namespace

StudyReport run_study(const ExperimentGrid& input) {
  ExperimentGrid grid = input;
  if (!grid.fit_propensity && !grid.estimator.known_propensity) {
    grid.estimator.known_propensity = grid.p_treat;
  }
  grid.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<CellKey> cells;
  for (DgpKind f : grid.f_kinds) {
    for (DgpKind g : grid.g_kinds) {
      for (double s : grid.sigma_eps) {
        for (std::size_t n : grid.sizes) cells.push_back(CellKey{f, g, s, n});
      }
    }
  }

  const std::size_t reps = grid.replications;
  std::vector<RepOutcome> outcomes(cells.size() * reps);
  const std::size_t workers = grid.threads > 0 ? grid.threads : worker_count();
  parallel_for(outcomes.size(), workers, [&](std::size_t i) {
    outcomes[i] = run_replication(grid, cells[i / reps], i % reps);
  });

  StudyReport report;
  report.grid = grid;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellReport cell;
    cell.key = cells[c];
    cell.true_ate = true_ate(cells[c].g_kind);
    const std::vector<RepOutcome> slice(outcomes.begin() + static_cast<std::ptrdiff_t>(c * reps),
                                        outcomes.begin() + static_cast<std::ptrdiff_t>((c + 1) * reps));
    for (std::size_t m = 0; m < grid.methods.size(); ++m) {
      cell.methods.push_back(summarize(grid.methods[m], m, slice, grid.alpha));
    }
    report.cells.push_back(std::move(cell));
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

nlohmann::json to_json(const ExperimentGrid& grid) {
  nlohmann::json j;
  auto kinds = [](const std::vector<DgpKind>& ks) {
    std::vector<std::string> out;
    for (DgpKind k : ks) out.push_back(to_string(k));
    return out;
  };
  j["f"] = kinds(grid.f_kinds);
  j["g"] = kinds(grid.g_kinds);
  j["sigma_eps"] = grid.sigma_eps;
  j["n"] = grid.sizes;
  j["p_treat"] = grid.p_treat;
  std::vector<std::string> methods;
  for (Method m : grid.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["replications"] = grid.replications;
  j["alpha"] = grid.alpha;
  j["learner"] = to_string(grid.estimator.learner.kind);
  j["folds"] = grid.estimator.folds;
  j["clip_eps"] = grid.estimator.clip_eps;
  if (grid.estimator.known_propensity) {
    j["propensity"] = *grid.estimator.known_propensity;
  } else {
    j["propensity"] = "fit";
  }
  j["tau"] = grid.tau;
  j["permutations"] = grid.permutations;
  j["root_seed"] = grid.root_seed;
  return j;
}

nlohmann::json to_json(const StudyReport& report) {
  nlohmann::json j;
  j["config"] = to_json(report.grid);
  j["runtime_seconds"] = report.runtime_seconds;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    nlohmann::json c;
    c["f"] = to_string(cell.key.f_kind);
    c["g"] = to_string(cell.key.g_kind);
    c["sigma_eps"] = cell.key.sigma_eps;
    c["n"] = cell.key.n;
    c["true_ate"] = cell.true_ate;
    nlohmann::json methods = nlohmann::json::array();
    nlohmann::json baselines = nlohmann::json::array();
    std::size_t failed = 0;
    for (const auto& m : cell.methods) {
      failed += m.failed;
      const bool is_baseline = m.method == Method::zdml || m.method == Method::cuped || m.method == Method::dim;
      (is_baseline ? baselines : methods).push_back({{"method", to_string(m.method)},
                         {"completed", m.completed},
                         {"n_failed", m.failed},
                         {"rejections", m.rejections},
                         {"rejection_rate", m.rejection_rate},
                         {"stderr", m.stderr_rate},
                         {"estimate_mean", m.estimate_mean},
                         {"estimate_variance", m.estimate_variance}});
    }
    c["n_failed"] = failed;
    c["methods"] = methods;
    c["baselines"] = baselines;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j;
}

void write_study_csv(const StudyReport& report, std::ostream& out) {
  out << "f,g,sigma_eps,n,method,completed,n_failed,rejections,rejection_rate,stderr,estimate_mean,"
         "estimate_variance\n";
  for (const auto& cell : report.cells) {
    for (const auto& m : cell.methods) {
      out << to_string(cell.key.f_kind) << ',' << to_string(cell.key.g_kind) << ',' << cell.key.sigma_eps << ','
          << cell.key.n << ',' << to_string(m.method) << ',' << m.completed << ',' << m.failed << ','
          << m.rejections << ',' << m.rejection_rate << ',' << m.stderr_rate << ',' << m.estimate_mean << ','
          << m.estimate_variance << '\n';
    }
  }
}

PowerAxis parse_power_axis(std::string_view name) {
  if (name == "sigma_eps" || name == "sigma-eps") return PowerAxis::sigma_eps;
  if (name == "n") return PowerAxis::n;
  if (name == "f") return PowerAxis::f;
  if (name == "g") return PowerAxis::g;
  throw DomainError("unknown power-curve axis '" + std::string(name) + "'");
}

void emit_power_curves(const StudyReport& report, PowerAxis axis, std::ostream& out) {
  out << "method,axis_value,rejection_rate,stderr\n";
  struct Row {
    std::string method;
    double axis_value;
    double rate;
    double se;
  };
  std::vector<Row> rows;
  for (const auto& cell : report.cells) {
    double value = 0.0;
    switch (axis) {
      case PowerAxis::sigma_eps: value = cell.key.sigma_eps; break;
      case PowerAxis::n: value = static_cast<double>(cell.key.n); break;
      case PowerAxis::f: value = static_cast<double>(cell.key.f_kind); break;
      case PowerAxis::g: value = static_cast<double>(cell.key.g_kind); break;
    }
    for (const auto& m : cell.methods) rows.push_back({to_string(m.method), value, m.rejection_rate, m.stderr_rate});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.method, a.axis_value) < std::tie(b.method, b.axis_value);
  });
  for (const auto& r : rows) {
    out << r.method << ',' << r.axis_value << ',' << r.rate << ',' << r.se << '\n';
  }
}

ScltReport run_sclt_check(double mu, double sigma, double lambda, std::size_t n, std::size_t reps,
                          std::uint64_t seed, std::size_t threads) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    throw DomainError("run_sclt_check: need finite mu and sigma > 0");
  }
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("run_sclt_check: lambda must lie in [0, 1)");
  if (n < 2 || reps < 1) throw DomainError("run_sclt_check: need n >= 2 and reps >= 1");

  ScltReport report;
  report.mu = mu;
  report.sigma = sigma;
  report.lambda = lambda;
  report.n = n;
  report.reps = reps;
  const BanditParams params = BanditParams::from_effect(mu, sigma, lambda, n);
  report.omega = params.omega;
  report.sigma0 = params.sigma0;
  report.rate_bound = sigma / ((1.0 - lambda) * std::sqrt(static_cast<double>(n)));
  report.asserted = report.rate_bound <= kScltRateLimit;
  report.critical_value = normal_quantile(0.975);

  std::vector<double> stats(reps);
  parallel_for(reps, threads > 0 ? threads : worker_count(), [&](std::size_t r) {
    Rng rng(derive_seed(seed, {r, 0}));
    std::vector<double> rewards(n);
    for (double& v : rewards) v = rng.normal(mu, sigma);
    const RewardSequence seq = RewardSequence::from_values(std::move(rewards));
    stats[r] = run_optimal_policy(seq, lambda, derive_seed(seed, {r, 1})).statistic();
  });

  report.ks_distance = ks_statistic(stats, [&](double y) { return bandit_cdf(y, params); });
  std::size_t exceed = 0;
  for (double t : stats) {
    if (std::abs(t) > report.critical_value) ++exceed;
  }
  report.empirical_tail = static_cast<double>(exceed) / static_cast<double>(reps);
  report.theoretical_tail = bandit_tail_prob(report.critical_value, params);
  return report;
}

nlohmann::json to_json(const ScltReport& r) {
  return {{"mu", r.mu},
          {"sigma", r.sigma},
          {"lambda", r.lambda},
          {"n", r.n},
          {"reps", r.reps},
          {"omega", r.omega},
          {"sigma0", r.sigma0},
          {"ks_distance", r.ks_distance},
          {"critical_value", r.critical_value},
          {"empirical_tail", r.empirical_tail},
          {"theoretical_tail", r.theoretical_tail},
          {"rate_bound", r.rate_bound},
          {"asserted", r.asserted}};
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || !std::isfinite(v)) {
    throw DomainError("option " + key + ": '" + value + "' is not a number");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!value.empty() && value[0] != '-') v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size()) {
    throw DomainError("option " + key + ": '" + value + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw DomainError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw DomainError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path.string());
  return parse_config(in);
}

void apply_options(ExperimentGrid& grid, const std::map<std::string, std::string>& options) {
  for (const auto& [key, value] : options) {
    if (key == "f" || key == "g") {
      std::vector<DgpKind> kinds;
      for (const auto& item : split_list(value)) kinds.push_back(parse_dgp_kind(item));
      (key == "f" ? grid.f_kinds : grid.g_kinds) = kinds;
    } else if (key == "sigma-eps") {
      grid.sigma_eps.clear();
      for (const auto& item : split_list(value)) grid.sigma_eps.push_back(to_double(key, item));
    } else if (key == "n") {
      grid.sizes.clear();
      for (const auto& item : split_list(value)) grid.sizes.push_back(to_count(key, item));
    } else if (key == "p-treat") {
      grid.p_treat = to_double(key, value);
    } else if (key == "methods") {
      grid.methods.clear();
      for (const auto& item : split_list(value)) grid.methods.push_back(parse_method(item));
    } else if (key == "reps" || key == "replications") {
      grid.replications = to_count(key, value);
    } else if (key == "alpha") {
      grid.alpha = to_double(key, value);
    } else if (key == "learner") {
      grid.estimator.learner = LearnerSpec::make(parse_learner_kind(value));
    } else if (key == "folds") {
      grid.estimator.folds = to_count(key, value);
    } else if (key == "clip-eps") {
      grid.estimator.clip_eps = to_double(key, value);
    } else if (key == "propensity") {
      if (value == "fit") {
        grid.fit_propensity = true;
        grid.estimator.known_propensity.reset();
      } else if (value.rfind("known:", 0) == 0) {
        grid.fit_propensity = false;
        grid.estimator.known_propensity = to_double(key, value.substr(6));
      } else {
        throw DomainError("option propensity: expected 'fit' or 'known:<p>', got '" + value + "'");
      }
    } else if (key == "tau") {
      grid.tau = to_double(key, value);
    } else if (key == "permutations") {
      grid.permutations = to_count(key, value);
    } else if (key == "seed") {
      grid.root_seed = to_count(key, value);
    } else if (key == "threads") {
      grid.threads = to_count(key, value);
    } else {
      throw DomainError("unknown option '" + key + "'");
    }
  }
}

}  // namespace pwtab
