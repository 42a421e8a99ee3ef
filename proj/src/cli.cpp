#include "potlab/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "potlab/diagnostics.hpp"
#include "potlab/error.hpp"
#include "potlab/estimation.hpp"
#include "potlab/game_core.hpp"
#include "potlab/game_zoo.hpp"
#include "potlab/harness.hpp"
#include "potlab/io.hpp"
#include "potlab/offline.hpp"
#include "potlab/solvers.hpp"
#include "potlab/svg_plot.hpp"

namespace potlab {

namespace {

// Fills options that were not given on the command line from a JSON object
// whose keys are option names (underscores or hyphens).
void apply_config(CLI::App& sub, const Json& config) {
  if (!config.is_object()) throw Error("config: expected a JSON object");
  for (const auto& [key, value] : config.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") throw Error("config." + key + ": not allowed here");
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (!opt) throw Error("config." + key + ": unknown option for '" +
                          sub.get_name() + "'");
    if (opt->count() > 0) continue;  // the command line wins
    std::vector<std::string> tokens;
    auto token = [&](const Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      if (v.is_number()) return v.dump();
      throw Error("config." + key + ": expected a string, number or boolean");
    };
    if (value.is_array()) {
      for (const auto& v : value) tokens.push_back(token(v));
    } else {
      tokens.push_back(token(value));
    }
    for (auto& t : tokens) opt->add_result(t);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw Error("config." + key + ": " + e.what());
    }
  }
}

void emit(const std::string& text, const std::string& out_path,
          std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

void emit_json(const Json& j, const std::string& out_path, std::ostream& out) {
  emit(j.dump(2) + "\n", out_path, out);
}

std::vector<JointTable> load_estimates(const std::string& path,
                                       const Game& game) {
  return estimate_tables(estimates_from_json(read_json_file(path), game));
}

struct Options {
  // shared
  std::string config, out;
  std::uint64_t seed = 0;
  // game spec
  std::string family = "team";
  int players = 2;
  int contexts = 1;
  std::vector<int> actions;
  double scale = 0.0;
  double reward_lo = 0.0;
  double reward_hi = 1.0;
  // files
  std::string game, data, estimates, policy, class_out, trajectory_csv, input;
  // data and fitting
  int n = 100;
  double mix = 1.0;
  double noise_sigma = 0.0;
  int distractors = 0;
  double perturb_scale = 0.0;
  // solver
  double eta = 1.0;
  double gamma = 0.25;
  double tol = 1e-10;
  double damping = 0.5;
  std::int64_t max_iters = 1'000'000;
  std::string method = "damped_best_response";
  std::int64_t T = 1000;
  std::optional<double> smoothness;
  bool certify = false;
  bool last_iterate = false;
  // check
  std::string only;
  // sweep overrides
  std::optional<int> seeds;
  std::optional<int> threads;
  std::optional<std::string> algorithms;
  std::vector<int> n_grid;
  std::string title = "nash gap vs n";
};

void add_common(CLI::App* sub, Options& o, bool with_seed) {
  sub->add_option("--config", o.config, "JSON file with option values");
  sub->add_option("--out", o.out, "output path (stdout when omitted)");
  if (with_seed) sub->add_option("--seed", o.seed, "random seed");
}

void add_eta(CLI::App* sub, Options& o) {
  sub->add_option("--eta", o.eta, "KL regularization weight")
      ->check(CLI::PositiveNumber);
}

SolverConfig solver_from(const Options& o) {
  SolverConfig cfg;
  cfg.eta = o.eta;
  cfg.gamma = o.gamma;
  cfg.fixed_point_tol = o.tol;
  cfg.damping = o.damping;
  cfg.rope_max_iters = o.max_iters;
  cfg.max_iters = o.T;
  cfg.smoothness_constant = o.smoothness;
  cfg.certify_step = o.certify;
  cfg.seed = o.seed;
  if (o.method == "opmd") {
    cfg.rope_method = RopeMethod::kOpmd;
  } else if (o.method != "damped_best_response") {
    throw Error("--method: expected damped_best_response or opmd");
  }
  return cfg;
}

void need(const std::string& value, const std::string& flag) {
  if (value.empty()) throw Error(flag + " is required");
}

Game model_game(const Options& o, Game truth) {
  if (o.estimates.empty()) return truth;
  const auto est = estimates_from_json(read_json_file(o.estimates), truth);
  return empirical_game(truth, est);
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"potlab: offline equilibrium learning in potential games"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "game from a spec to JSON");
  add_common(generate, o, true);
  generate->add_option("--family", o.family,
                       "team | perturbed_team | congestion | random_general_sum");
  generate->add_option("--players", o.players)->check(CLI::PositiveNumber);
  generate->add_option("--contexts", o.contexts)->check(CLI::PositiveNumber);
  generate->add_option("--actions", o.actions, "action count per player");
  generate->add_option("--scale", o.scale, "perturbation scale");
  generate->add_option("--reward-lo", o.reward_lo);
  generate->add_option("--reward-hi", o.reward_hi);

  auto* dataset = app.add_subcommand("dataset", "sample an offline dataset to JSONL");
  add_common(dataset, o, true);
  dataset->add_option("--game", o.game, "game JSON");
  dataset->add_option("--n", o.n, "number of samples")->check(CLI::PositiveNumber);
  dataset->add_option("--mix", o.mix, "weight on the reference policy");
  dataset->add_option("--noise-sigma", o.noise_sigma);

  auto* fit = app.add_subcommand("fit", "least-squares fit to estimate JSON");
  add_common(fit, o, true);
  fit->add_option("--game", o.game);
  fit->add_option("--data", o.data, "dataset JSONL");
  fit->add_option("--distractors", o.distractors)->check(CLI::NonNegativeNumber);
  fit->add_option("--perturb-scale", o.perturb_scale);
  fit->add_option("--class-out", o.class_out, "write the function class here");

  auto* rope = app.add_subcommand("solve-rope", "regularized NE of the model game");
  add_common(rope, o, false);
  rope->add_option("--game", o.game);
  rope->add_option("--estimates", o.estimates, "estimate JSON (truth if omitted)");
  add_eta(rope, o);
  rope->add_option("--tol", o.tol, "fixed-point tolerance");
  rope->add_option("--damping", o.damping);
  rope->add_option("--max-iters", o.max_iters);
  rope->add_option("--method", o.method, "damped_best_response | opmd");
  rope->add_option("--gamma", o.gamma, "step size for the opmd method");

  auto* opmd = app.add_subcommand("solve-opmd", "run OPMD on the model game");
  add_common(opmd, o, true);
  opmd->add_option("--game", o.game);
  opmd->add_option("--estimates", o.estimates);
  add_eta(opmd, o);
  opmd->add_option("--gamma", o.gamma)->check(CLI::PositiveNumber);
  opmd->add_option("--T", o.T, "iterations")->check(CLI::PositiveNumber);
  opmd->add_option("--smoothness", o.smoothness, "L_Phi (default m)");
  opmd->add_flag("--certify", o.certify, "require gamma <= 1/(2 L_Phi)");
  opmd->add_flag("--last-iterate", o.last_iterate, "output pi^(T+1)");
  opmd->add_option("--trajectory-csv", o.trajectory_csv,
                   "write per-step scalars here");

  auto* gap = app.add_subcommand("gap", "evaluate a policy file");
  add_common(gap, o, false);
  gap->add_option("--game", o.game);
  gap->add_option("--policy", o.policy);
  gap->add_option("--estimates", o.estimates, "adds the gap decomposition");
  add_eta(gap, o);

  auto* coverage = app.add_subcommand("coverage", "C_uni and C_shift report");
  add_common(coverage, o, false);
  coverage->add_option("--game", o.game);
  coverage->add_option("--mix", o.mix);
  add_eta(coverage, o);

  auto* check = app.add_subcommand("check", "run the diagnostics suite");
  add_common(check, o, true);
  check->add_option("--only", o.only, "run a single named check");

  auto* sweep = app.add_subcommand("sweep", "full rate experiment");
  sweep->add_option("--config", o.config, "experiment JSON")->required();
  sweep->add_option("--out", o.out, "output directory");
  sweep->add_option("--seed", o.seed, "root seed");
  sweep->add_option("--seeds", o.seeds, "seeds per cell");
  sweep->add_option("--threads", o.threads);
  sweep->add_option("--algorithms", o.algorithms, "rope | opmd | both");
  sweep->add_option("--n-grid", o.n_grid);
  sweep->add_flag("--persist-policies", "write one policy file per row");

  auto* plot = app.add_subcommand("plot", "results CSV to SVG");
  add_common(plot, o, false);
  plot->add_option("--input", o.input, "results.csv");
  plot->add_option("--title", o.title);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const auto sub_name = sub->get_name();
  if (sub_name != "sweep" && !o.config.empty()) {
    apply_config(*sub, read_json_file(o.config));
  }
  if (sub->get_option_no_throw("--game")) need(o.game, "--game");
  if (sub_name == "fit") need(o.data, "--data");
  if (sub_name == "gap") need(o.policy, "--policy");
  if (sub_name == "plot") need(o.input, "--input");

  if (sub_name == "generate") {
    GameSpec spec;
    spec.family = family_from_name(o.family);
    spec.num_players = o.players;
    spec.num_contexts = o.contexts;
    spec.action_counts = o.actions.empty() ? std::vector<int>(o.players, 2) : o.actions;
    spec.perturbation_scale = o.scale;
    spec.seed = o.seed;
    spec.reward_lo = o.reward_lo;
    spec.reward_hi = o.reward_hi;
    emit_json(game_to_json(make_game(spec)), o.out, out);
    return kExitOk;
  }
  if (sub_name == "dataset") {
    const Game game = game_from_json(read_json_file(o.game));
    const ProductPolicy ref = ProductPolicy::uniform(game);
    const auto mu = uniform_mixture_behavior(game, ref, o.mix);
    const CoverageResult cov = coverage_coefficient(game, mu, ref);
    if (!cov.covered) {
      err << "warning: behavior does not cover the reference policy\n";
    }
    const Dataset data = sample_dataset(game, mu, o.n, o.seed, o.noise_sigma);
    emit(dataset_to_jsonl(data, game), o.out, out);
    return kExitOk;
  }
  if (sub_name == "fit") {
    const Game game = game_from_json(read_json_file(o.game));
    const Dataset data = read_dataset(o.data, game);
    const FunctionClass cls =
        build_tabular_class(game, o.distractors, o.perturb_scale, o.seed);
    if (!o.class_out.empty()) {
      write_json_file(o.class_out, function_class_to_json(cls, game));
    }
    emit_json(estimates_to_json(least_squares_fit_all(data, cls), game), o.out, out);
    return kExitOk;
  }
  if (sub_name == "solve-rope") {
    const Game model = model_game(o, game_from_json(read_json_file(o.game)));
    const SolverConfig cfg = solver_from(o);
    const RopeSolution sol = solve_rope(model, ProductPolicy::uniform(model), cfg);
    emit_json(policy_to_json(sol.policy, model), o.out, out);
    err << "rope: iterations " << sol.iterations << ", residual "
        << sol.max_residual << (sol.converged ? "" : " (not converged)") << "\n";
    return sol.converged ? kExitOk : kExitUncovered;
  }
  if (sub_name == "solve-opmd") {
    const Game model = model_game(o, game_from_json(read_json_file(o.game)));
    const SolverConfig cfg = solver_from(o);
    OpmdOptions opts;
    opts.last_iterate = o.last_iterate;
    opts.retain_limit = 1;
    opts.full_series = !o.trajectory_csv.empty();
    const OpmdTrajectory traj =
        run_opmd(model, ProductPolicy::uniform(model), cfg, opts);
    if (!o.trajectory_csv.empty()) {
      write_text_file(o.trajectory_csv, trajectory_scalars_csv(traj));
    }
    emit_json(policy_to_json(traj.output, model), o.out, out);
    err << "opmd: T " << traj.T << ", output index " << traj.output_index << "\n";
    return kExitOk;
  }
  if (sub_name == "gap") {
    const Game game = game_from_json(read_json_file(o.game));
    const ProductPolicy pi = policy_from_json(read_json_file(o.policy), game);
    const ProductPolicy ref = ProductPolicy::uniform(game);
    const NashGapReport rep = nash_gap_report(game, pi, ref, o.eta);
    Json j{{"nash_gap", rep.gap}, {"per_player", rep.per_player},
           {"unregularized_exploitability", unregularized_exploitability(game, pi)}};
    if (!o.estimates.empty()) {
      const auto q_hat = load_estimates(o.estimates, game);
      const GapDecomposition d = gap_decomposition(game, q_hat, pi, ref, o.eta);
      j["eps_pot"] = d.eps_pot;
      j["delta_br"] = d.delta_br;
      j["delta_iter"] = d.delta_iter;
    }
    emit_json(j, o.out, out);
    return kExitOk;
  }
  if (sub_name == "coverage") {
    const Game game = game_from_json(read_json_file(o.game));
    const ProductPolicy ref = ProductPolicy::uniform(game);
    const auto mu = uniform_mixture_behavior(game, ref, o.mix);
    const CoverageResult cov = coverage_coefficient(game, mu, ref);
    Json j = coverage_to_json(cov);
    j["C_shift"] = shift_coefficient(o.eta, game.num_players());
    emit_json(j, o.out, out);
    return cov.covered ? kExitOk : kExitUncovered;
  }
  if (sub_name == "check") {
    std::optional<std::string> only;
    if (!o.only.empty()) only = o.only;
    const std::uint64_t seed = sub->count("--seed") ? o.seed : kDiagnosticsSeed;
    const auto reports = run_diagnostics_suite(only, seed);
    Json j = Json::array();
    bool all_pass = true;
    for (const auto& r : reports) {
      j.push_back(report_to_json(r));
      all_pass = all_pass && r.pass;
      out << (r.pass ? "PASS " : "FAIL ") << r.name << " instances=" << r.instances
          << " worst_violation=" << r.worst_violation << "\n";
    }
    if (!o.out.empty()) write_json_file(o.out, j);
    return all_pass ? kExitOk : kExitCheckFailure;
  }
  if (sub_name == "sweep") {
    ExperimentConfig cfg = experiment_config_from_json(read_json_file(o.config));
    if (sub->count("--seed")) cfg.root_seed = o.seed;
    if (sub->count("--out")) cfg.output_dir = o.out;
    if (o.seeds) cfg.seeds = *o.seeds;
    if (o.threads) cfg.threads = *o.threads;
    if (!o.n_grid.empty()) cfg.n_grid = o.n_grid;
    if (sub->count("--persist-policies")) cfg.persist_policies = true;
    if (o.algorithms) {
      Json patch = experiment_config_to_json(cfg);
      patch["algorithms"] = *o.algorithms;
      cfg = experiment_config_from_json(patch);
    }
    cfg.validate();
    const SweepResult result = run_sweep(cfg);
    write_sweep_outputs(result, cfg, experiment_game(cfg));
    for (const auto& s : result.slopes) {
      out << s.algorithm << ": slope " << s.slope << " [" << s.ci_low << ", "
          << s.ci_high << "]" << (s.floor_dominated ? " floor-dominated" : "")
          << (s.message.empty() ? "" : " (" + s.message + ")") << "\n";
    }
    out << "wrote " << (cfg.output_dir / "results.csv").string() << "\n";
    return result.nonconverged > 0 ? kExitUncovered : kExitOk;
  }
  if (sub_name == "plot") {
    std::ifstream in(o.input);
    if (!in) throw Error("--input: cannot open '" + o.input + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    emit(gap_plot_svg(sweep_rows_from_csv(buf.str()), o.title), o.out, out);
    return kExitOk;
  }
  throw InternalError("unhandled subcommand " + sub_name);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  try {
    return run(args, out, err);
  } catch (const UncoveredError& e) {
    err << "uncovered: " << e.what() << "\n";
    return kExitUncovered;
  } catch (const NonConvergenceError& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kExitUncovered;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace potlab
