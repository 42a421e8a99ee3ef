#include "potlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "potlab/error.hpp"
#include "potlab/estimation.hpp"
#include "potlab/game_core.hpp"
#include "potlab/offline.hpp"
#include "potlab/rng.hpp"
#include "potlab/stats.hpp"

namespace potlab {

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& known,
                    const std::string& path) {
  if (!obj.is_object()) throw Error(path + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw Error(path + "." + key + ": unknown field");
    }
  }
}

bool json_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw Error(path + ": expected a boolean");
  return j.get<bool>();
}

std::uint64_t json_seed(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw Error(path + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

int json_int(const Json& j, const std::string& path) {
  const long long v = json_integer(j, path);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error(path + ": integer out of range");
  }
  return static_cast<int>(v);
}

std::string algorithm_name(AlgorithmSelector a) {
  switch (a) {
    case AlgorithmSelector::kRope: return "rope";
    case AlgorithmSelector::kOpmd: return "opmd";
    case AlgorithmSelector::kBoth: return "both";
  }
  return "rope";
}

}  // namespace

void ExperimentConfig::validate() const {
  game.validate();
  if (n_grid.empty()) throw Error("n_grid: must not be empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] <= 0) throw Error("n_grid: entries must be positive");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) {
      throw Error("n_grid: must be strictly increasing");
    }
  }
  if (seeds < 1) throw Error("seeds: must be at least 1");
  if (!(behavior_mix >= 0.0 && behavior_mix <= 1.0)) {
    throw Error("behavior.mix: must lie in [0, 1]");
  }
  if (noise_sigma < 0.0) throw Error("behavior.noise_sigma: must be >= 0");
  if (num_distractors < 0) {
    throw Error("function_class.num_distractors: must be >= 0");
  }
  if (perturb_scale < 0.0) {
    throw Error("function_class.perturb_scale: must be >= 0");
  }
  if (T < 1) throw Error("solver.T: must be positive");
  if (T_max < 1) throw Error("solver.T_max: must be positive");
  if (opmd_gap_samples < 0) throw Error("opmd_gap_samples: must be >= 0");
  solver.validate(game.num_players);
}

std::int64_t ExperimentConfig::horizon(int n) const {
  if (t_rule == TRule::kExplicit) return T;
  const std::int64_t sq = static_cast<std::int64_t>(n) * n;
  return std::min(sq, T_max);
}

GameSpec game_spec_from_json(const Json& j, const std::string& path) {
  reject_unknown(j,
                 {"family", "num_players", "num_contexts", "action_counts",
                  "perturbation_scale", "seed", "reward_lo", "reward_hi"},
                 path);
  GameSpec spec;
  if (j.contains("family")) {
    try {
      spec.family = family_from_name(json_string(j["family"], path + ".family"));
    } catch (const Error& e) {
      throw Error(path + ".family: " + e.what());
    }
  }
  if (j.contains("num_players")) {
    spec.num_players = json_int(j["num_players"], path + ".num_players");
  }
  if (j.contains("num_contexts")) {
    spec.num_contexts = json_int(j["num_contexts"], path + ".num_contexts");
  }
  if (j.contains("action_counts")) {
    const Json& a = j["action_counts"];
    if (!a.is_array()) throw Error(path + ".action_counts: expected an array");
    spec.action_counts.clear();
    for (std::size_t k = 0; k < a.size(); ++k) {
      spec.action_counts.push_back(
          json_int(a[k], path + ".action_counts[" + std::to_string(k) + "]"));
    }
  } else {
    spec.action_counts.assign(spec.num_players, 2);
  }
  if (j.contains("perturbation_scale")) {
    spec.perturbation_scale =
        json_number(j["perturbation_scale"], path + ".perturbation_scale");
  }
  if (j.contains("seed")) spec.seed = json_seed(j["seed"], path + ".seed");
  if (j.contains("reward_lo")) {
    spec.reward_lo = json_number(j["reward_lo"], path + ".reward_lo");
  }
  if (j.contains("reward_hi")) {
    spec.reward_hi = json_number(j["reward_hi"], path + ".reward_hi");
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  return spec;
}

Json game_spec_to_json(const GameSpec& spec) {
  return Json{{"family", family_name(spec.family)},
              {"num_players", spec.num_players},
              {"num_contexts", spec.num_contexts},
              {"action_counts", spec.action_counts},
              {"perturbation_scale", spec.perturbation_scale},
              {"seed", spec.seed},
              {"reward_lo", spec.reward_lo},
              {"reward_hi", spec.reward_hi}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"game", "behavior", "function_class", "solver", "n_grid",
                  "seeds", "algorithms", "root_seed", "output_dir", "threads",
                  "opmd_gap_samples", "persist_policies"},
                 "config");
  ExperimentConfig cfg;
  cfg.game = game_spec_from_json(require_field(j, "game", "config"), "game");
  if (j.contains("behavior")) {
    const Json& b = j["behavior"];
    reject_unknown(b, {"mix", "noise_sigma"}, "behavior");
    if (b.contains("mix")) cfg.behavior_mix = json_number(b["mix"], "behavior.mix");
    if (b.contains("noise_sigma")) {
      cfg.noise_sigma = json_number(b["noise_sigma"], "behavior.noise_sigma");
    }
  }
  if (j.contains("function_class")) {
    const Json& f = j["function_class"];
    reject_unknown(f, {"num_distractors", "perturb_scale"}, "function_class");
    if (f.contains("num_distractors")) {
      cfg.num_distractors =
          json_int(f["num_distractors"], "function_class.num_distractors");
    }
    if (f.contains("perturb_scale")) {
      cfg.perturb_scale =
          json_number(f["perturb_scale"], "function_class.perturb_scale");
    }
  }
  if (j.contains("solver")) {
    const Json& s = j["solver"];
    reject_unknown(s,
                   {"eta", "gamma", "fixed_point_tol", "damping",
                    "rope_max_iters", "rope_method", "smoothness_constant",
                    "certify", "T_rule", "T", "T_max"},
                   "solver");
    SolverConfig& sc = cfg.solver;
    if (s.contains("eta")) sc.eta = json_number(s["eta"], "solver.eta");
    if (s.contains("gamma")) {
      if (s["gamma"].is_string() &&
          s["gamma"].get<std::string>() == "inverse_2m") {
        sc.gamma = 1.0 / (2.0 * cfg.game.num_players);
      } else {
        sc.gamma = json_number(s["gamma"], "solver.gamma");
      }
    }
    if (s.contains("fixed_point_tol")) {
      sc.fixed_point_tol =
          json_number(s["fixed_point_tol"], "solver.fixed_point_tol");
    }
    if (s.contains("damping")) sc.damping = json_number(s["damping"], "solver.damping");
    if (s.contains("rope_max_iters")) {
      sc.rope_max_iters = json_integer(s["rope_max_iters"], "solver.rope_max_iters");
    }
    if (s.contains("rope_method")) {
      const std::string m = json_string(s["rope_method"], "solver.rope_method");
      if (m == "damped_best_response") {
        sc.rope_method = RopeMethod::kDampedBestResponse;
      } else if (m == "opmd") {
        sc.rope_method = RopeMethod::kOpmd;
      } else {
        throw Error("solver.rope_method: expected damped_best_response or opmd");
      }
    }
    if (s.contains("smoothness_constant")) {
      sc.smoothness_constant =
          json_number(s["smoothness_constant"], "solver.smoothness_constant");
    }
    if (s.contains("certify")) sc.certify_step = json_bool(s["certify"], "solver.certify");
    if (s.contains("T_rule")) {
      const std::string r = json_string(s["T_rule"], "solver.T_rule");
      if (r == "explicit") {
        cfg.t_rule = TRule::kExplicit;
      } else if (r == "n_squared") {
        cfg.t_rule = TRule::kNSquared;
      } else {
        throw Error("solver.T_rule: expected explicit or n_squared");
      }
    }
    if (s.contains("T")) cfg.T = json_integer(s["T"], "solver.T");
    if (s.contains("T_max")) cfg.T_max = json_integer(s["T_max"], "solver.T_max");
  }
  const Json& grid = require_field(j, "n_grid", "config");
  if (!grid.is_array()) throw Error("n_grid: expected an array");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    cfg.n_grid.push_back(json_int(grid[k], "n_grid[" + std::to_string(k) + "]"));
  }
  if (j.contains("seeds")) cfg.seeds = json_int(j["seeds"], "seeds");
  if (j.contains("algorithms")) {
    const std::string a = json_string(j["algorithms"], "algorithms");
    if (a == "rope") {
      cfg.algorithms = AlgorithmSelector::kRope;
    } else if (a == "opmd") {
      cfg.algorithms = AlgorithmSelector::kOpmd;
    } else if (a == "both") {
      cfg.algorithms = AlgorithmSelector::kBoth;
    } else {
      throw Error("algorithms: expected rope, opmd or both");
    }
  }
  if (j.contains("root_seed")) cfg.root_seed = json_seed(j["root_seed"], "root_seed");
  if (j.contains("output_dir")) {
    cfg.output_dir = json_string(j["output_dir"], "output_dir");
  }
  if (j.contains("threads")) cfg.threads = json_int(j["threads"], "threads");
  if (j.contains("opmd_gap_samples")) {
    cfg.opmd_gap_samples = json_int(j["opmd_gap_samples"], "opmd_gap_samples");
  }
  if (j.contains("persist_policies")) {
    cfg.persist_policies = json_bool(j["persist_policies"], "persist_policies");
  }
  cfg.validate();
  return cfg;
}

Json experiment_config_to_json(const ExperimentConfig& cfg) {
  Json solver{{"eta", cfg.solver.eta},
              {"gamma", cfg.solver.gamma},
              {"fixed_point_tol", cfg.solver.fixed_point_tol},
              {"damping", cfg.solver.damping},
              {"rope_max_iters", cfg.solver.rope_max_iters},
              {"rope_method", cfg.solver.rope_method == RopeMethod::kOpmd
                                  ? "opmd"
                                  : "damped_best_response"},
              {"certify", cfg.solver.certify_step},
              {"T_rule", cfg.t_rule == TRule::kExplicit ? "explicit" : "n_squared"},
              {"T", cfg.T},
              {"T_max", cfg.T_max}};
  if (cfg.solver.smoothness_constant) {
    solver["smoothness_constant"] = *cfg.solver.smoothness_constant;
  }
  return Json{{"game", game_spec_to_json(cfg.game)},
              {"behavior", {{"mix", cfg.behavior_mix}, {"noise_sigma", cfg.noise_sigma}}},
              {"function_class",
               {{"num_distractors", cfg.num_distractors},
                {"perturb_scale", cfg.perturb_scale}}},
              {"solver", solver},
              {"n_grid", cfg.n_grid},
              {"seeds", cfg.seeds},
              {"algorithms", algorithm_name(cfg.algorithms)},
              {"root_seed", cfg.root_seed},
              {"output_dir", cfg.output_dir.string()},
              {"threads", cfg.threads},
              {"opmd_gap_samples", cfg.opmd_gap_samples},
              {"persist_policies", cfg.persist_policies}};
}

Game experiment_game(const ExperimentConfig& cfg) { return make_game(cfg.game); }

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("POTLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  n = std::min<long long>(n, std::max<std::size_t>(jobs, 1));
  return n;
}

SlopeFit fit_rate_slope(const std::vector<SweepRow>& rows,
                        const std::string& algorithm, double floor_tol) {
  SlopeFit fit;
  fit.algorithm = algorithm;
  std::map<int, std::vector<double>> by_n;
  for (const auto& r : rows) {
    if (r.algorithm == algorithm) by_n[r.n].push_back(r.nash_gap);
  }
  std::vector<double> lx, ly;
  for (auto& [n, gaps] : by_n) {
    const double med = median(gaps);
    fit.n.push_back(n);
    fit.median_gap.push_back(med);
    fit.iqr_gap.push_back(quantile(gaps, 0.75) - quantile(gaps, 0.25));
    if (!(med >= floor_tol) || med <= 0.0) {
      fit.excluded_n.push_back(n);
      continue;
    }
    fit.used_n.push_back(n);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(med));
  }
  fit.floor_dominated = !fit.excluded_n.empty();
  if (lx.size() < 3) {
    std::ostringstream msg;
    msg << "fit_rate_slope(" << algorithm << "): " << lx.size()
        << " usable points, need 3 (" << fit.excluded_n.size()
        << " floor-dominated cells below " << floor_tol << ")";
    throw Error(msg.str());
  }
  const LinearFit lf = ols(lx, ly);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.stderr_slope = lf.stderr_slope;
  const double dof = static_cast<double>(lx.size()) - 2.0;
  const boost::math::students_t dist(dof);
  const double tq = boost::math::quantile(dist, 0.975);
  fit.ci_low = lf.slope - tq * lf.stderr_slope;
  fit.ci_high = lf.slope + tq * lf.stderr_slope;
  fit.ok = true;
  return fit;
}

namespace {

struct Job {
  std::string algorithm;
  int n;
  int seed;
};

SweepRow run_cell(const ExperimentConfig& cfg, const Job& job, const Game& truth,
                  const ProductPolicy& ref, const BehaviorDistribution& mu,
                  const FunctionClass& cls, double c_uni, double c_shift) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t cell =
      derive_seed(derive_seed(cfg.root_seed, "cell", static_cast<std::uint64_t>(job.n)),
                  "seed", static_cast<std::uint64_t>(job.seed));
  // The dataset depends only on (n, seed) so both algorithms see the same one.
  const Dataset data = sample_dataset(truth, mu, job.n, derive_seed(cell, "dataset", 0),
                                      cfg.noise_sigma);
  const std::vector<QEstimate> est = least_squares_fit_all(data, cls);
  const Game model = empirical_game(truth, est);
  const std::vector<JointTable> q_hat = estimate_tables(est);

  SweepRow row;
  row.algorithm = job.algorithm;
  row.n = job.n;
  row.seed = job.seed;
  row.c_uni = c_uni;
  row.c_shift = c_shift;
  for (const auto& e : est) row.chosen_index.push_back(e.chosen_index);

  if (job.algorithm == "rope") {
    const RopeSolution sol = solve_rope(model, ref, cfg.solver);
    row.policy = sol.policy;
    row.residual = sol.max_residual;
    row.converged = sol.converged;
    row.nash_gap = nash_gap(truth, row.policy, ref, cfg.solver.eta);
    row.sampled_gap = row.nash_gap;
  } else {
    SolverConfig sc = cfg.solver;
    sc.max_iters = cfg.horizon(job.n);
    sc.seed = derive_seed(cell, "opmd", 0);
    OpmdOptions opts;
    opts.retain_limit = 1;
    Rng pick(derive_seed(cell, "gap_samples", 0));
    for (int k = 0; k < cfg.opmd_gap_samples; ++k) {
      opts.pinned.push_back(1 + static_cast<std::int64_t>(
                                    pick.below(static_cast<std::uint64_t>(sc.max_iters))));
    }
    const OpmdTrajectory traj = run_opmd(model, ref, sc, opts);
    row.T = sc.max_iters;
    row.t_star = traj.output_index;
    row.policy = traj.output;
    row.nash_gap = nash_gap(truth, row.policy, ref, cfg.solver.eta);
    if (cfg.opmd_gap_samples > 0) {
      double sum = 0.0;
      for (auto t : opts.pinned) {
        const IterateRecord* rec = traj.find(t);
        if (!rec) throw InternalError("sampled iterate was not retained");
        sum += nash_gap(truth, rec->policy, ref, cfg.solver.eta);
      }
      row.sampled_gap = sum / static_cast<double>(opts.pinned.size());
    } else {
      row.sampled_gap = row.nash_gap;
    }
  }
  const GapDecomposition d =
      gap_decomposition(truth, q_hat, row.policy, ref, cfg.solver.eta);
  row.eps_pot_sum = d.eps_pot_sum();
  row.delta_br_sum = d.delta_br_sum();
  row.delta_iter_sum = d.delta_iter_sum();
  row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return row;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Game truth = experiment_game(cfg);
  const ProductPolicy ref = ProductPolicy::uniform(truth);
  const BehaviorDistribution mu = uniform_mixture_behavior(truth, ref, cfg.behavior_mix);
  const CoverageResult cov = coverage_coefficient(truth, mu, ref);
  if (!cov.covered) {
    std::ostringstream msg;
    msg << "uncovered configuration: player " << cov.witness.player << ", context "
        << truth.contexts()[cov.witness.context] << ", joint action "
        << cov.witness.joint << " has reference mass but no behavior mass";
    throw UncoveredError(msg.str(), cov.witness.player, cov.witness.context,
                         cov.witness.joint);
  }
  SweepResult result;
  result.c_uni = cov.c_uni;
  result.c_shift = shift_coefficient(cfg.solver.eta, truth.num_players());
  const FunctionClass cls = build_tabular_class(
      truth, cfg.num_distractors, cfg.perturb_scale,
      derive_seed(cfg.root_seed, "function_class", 0));

  const bool want_rope = cfg.algorithms != AlgorithmSelector::kOpmd;
  const bool want_opmd = cfg.algorithms != AlgorithmSelector::kRope;
  if (want_opmd && cfg.t_rule == TRule::kNSquared) {
    for (int n : cfg.n_grid) {
      if (static_cast<std::int64_t>(n) * n > cfg.T_max) {
        result.capped_n.push_back(n);
        std::cerr << "warning: T = n^2 = " << static_cast<std::int64_t>(n) * n
                  << " exceeds T_max = " << cfg.T_max << " at n = " << n
                  << "; capped\n";
      }
    }
  }
  std::vector<Job> jobs;
  for (const char* alg : {"opmd", "rope"}) {
    if ((std::string(alg) == "rope" && !want_rope) ||
        (std::string(alg) == "opmd" && !want_opmd)) {
      continue;
    }
    for (int n : cfg.n_grid) {
      for (int s = 0; s < cfg.seeds; ++s) jobs.push_back({alg, n, s});
    }
  }

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      try {
        rows[k] = run_cell(cfg, jobs[k], truth, ref, mu, cls, result.c_uni,
                           result.c_shift);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  const int workers = worker_count(cfg.threads, jobs.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.algorithm, a.n, a.seed) < std::tie(b.algorithm, b.n, b.seed);
  });
  for (const auto& r : rows) {
    if (r.nash_gap < 0.0) throw InternalError("negative gap in sweep row");
    if (!r.converged) ++result.nonconverged;
  }
  result.rows = std::move(rows);
  const double floor_tol = 10.0 * cfg.solver.fixed_point_tol;
  for (const char* alg : {"opmd", "rope"}) {
    if ((std::string(alg) == "rope" && !want_rope) ||
        (std::string(alg) == "opmd" && !want_opmd)) {
      continue;
    }
    try {
      result.slopes.push_back(fit_rate_slope(result.rows, alg, floor_tol));
    } catch (const Error& e) {
      // Report the medians anyway; the caller sees ok = false.
      SlopeFit fit;
      fit.algorithm = alg;
      fit.floor_dominated = true;
      fit.slope = fit.intercept = fit.stderr_slope =
          std::numeric_limits<double>::quiet_NaN();
      fit.ci_low = fit.ci_high = fit.slope;
      fit.message = e.what();
      std::map<int, std::vector<double>> by_n;
      for (const auto& r : result.rows) {
        if (r.algorithm == alg) by_n[r.n].push_back(r.nash_gap);
      }
      for (auto& [n, gaps] : by_n) {
        fit.n.push_back(n);
        fit.median_gap.push_back(median(gaps));
        fit.iqr_gap.push_back(quantile(gaps, 0.75) - quantile(gaps, 0.25));
        if (fit.median_gap.back() < floor_tol) {
          fit.excluded_n.push_back(n);
        } else {
          fit.used_n.push_back(n);
        }
      }
      result.slopes.push_back(std::move(fit));
    }
  }
  return result;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "algorithm,n,seed,nash_gap,eps_pot_sum,delta_br_sum,delta_iter_sum,"
         "C_uni,C_shift,runtime\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.n << ',' << r.seed << ','
        << fmt_double(r.nash_gap) << ',' << fmt_double(r.eps_pot_sum) << ','
        << fmt_double(r.delta_br_sum) << ',' << fmt_double(r.delta_iter_sum) << ','
        << fmt_double(r.c_uni) << ',' << fmt_double(r.c_shift) << ','
        << fmt_double(r.runtime) << '\n';
  }
  return out.str();
}

std::vector<SweepRow> sweep_rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("results csv: empty");
  const std::string header =
      "algorithm,n,seed,nash_gap,eps_pot_sum,delta_br_sum,delta_iter_sum,"
      "C_uni,C_shift,runtime";
  if (line != header) throw Error("results csv: unexpected header '" + line + "'");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) {
      throw Error("results csv line " + std::to_string(lineno) +
                  ": expected 10 columns");
    }
    try {
      SweepRow r;
      r.algorithm = cells[0];
      r.n = std::stoi(cells[1]);
      r.seed = std::stoi(cells[2]);
      r.nash_gap = std::stod(cells[3]);
      r.eps_pot_sum = std::stod(cells[4]);
      r.delta_br_sum = std::stod(cells[5]);
      r.delta_iter_sum = std::stod(cells[6]);
      r.c_uni = std::stod(cells[7]);
      r.c_shift = std::stod(cells[8]);
      r.runtime = std::stod(cells[9]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error("results csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

std::string slope_csv(const std::vector<SlopeFit>& slopes) {
  std::ostringstream out;
  out << "algorithm,slope,intercept,stderr,ci_low,ci_high,points,"
         "floor_dominated\n";
  for (const auto& s : slopes) {
    out << s.algorithm << ',' << fmt_double(s.slope) << ','
        << fmt_double(s.intercept) << ',' << fmt_double(s.stderr_slope) << ','
        << fmt_double(s.ci_low) << ',' << fmt_double(s.ci_high) << ','
        << s.used_n.size() << ',' << (s.floor_dominated ? "true" : "false")
        << '\n';
  }
  return out.str();
}

void write_sweep_outputs(const SweepResult& result, const ExperimentConfig& cfg,
                         const Game& truth) {
  const auto& dir = cfg.output_dir;
  write_text_file(dir / "results.csv", sweep_rows_csv(result.rows));
  write_text_file(dir / "slope.csv", slope_csv(result.slopes));
  Json details;
  details["config"] = experiment_config_to_json(cfg);
  details["C_uni"] = result.c_uni;
  details["C_shift"] = result.c_shift;
  details["capped_n"] = result.capped_n;
  details["nonconverged"] = result.nonconverged;
  Json slopes = Json::array();
  for (const auto& s : result.slopes) {
    Json js{{"algorithm", s.algorithm},
            {"ok", s.ok},
            {"floor_dominated", s.floor_dominated},
            {"n", s.n},
            {"median_gap", s.median_gap},
            {"iqr_gap", s.iqr_gap},
            {"used_n", s.used_n},
            {"excluded_n", s.excluded_n},
            {"message", s.message}};
    if (s.ok) {
      js["slope"] = s.slope;
      js["intercept"] = s.intercept;
      js["stderr"] = s.stderr_slope;
      js["ci"] = {s.ci_low, s.ci_high};
    }
    slopes.push_back(std::move(js));
  }
  details["slopes"] = slopes;
  Json rows = Json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"algorithm", r.algorithm},
                    {"n", r.n},
                    {"seed", r.seed},
                    {"T", r.T},
                    {"t_star", r.t_star},
                    {"sampled_gap", r.sampled_gap},
                    {"residual", r.residual},
                    {"converged", r.converged},
                    {"chosen_index", r.chosen_index}});
  }
  details["rows"] = rows;
  write_json_file(dir / "details.json", details);
  if (cfg.persist_policies) {
    for (const auto& r : result.rows) {
      write_json_file(dir / "policies" /
                          (r.algorithm + "_n" + std::to_string(r.n) + "_s" +
                           std::to_string(r.seed) + ".json"),
                      policy_to_json(r.policy, truth));
    }
  }
}

}  // namespace potlab
