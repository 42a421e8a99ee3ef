#ifndef POTLAB_HARNESS_HPP_
#define POTLAB_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "potlab/game_zoo.hpp"
#include "potlab/io.hpp"
#include "potlab/solvers.hpp"

namespace potlab {

enum class TRule { kExplicit, kNSquared };
enum class AlgorithmSelector { kRope, kOpmd, kBoth };

struct ExperimentConfig {
  GameSpec game;
  double behavior_mix = 1.0;
  double noise_sigma = 0.0;
  int num_distractors = 0;
  double perturb_scale = 0.0;
  SolverConfig solver;
  TRule t_rule = TRule::kNSquared;
  std::int64_t T = 1000;  // used when t_rule is explicit
  std::int64_t T_max = 1'000'000;
  std::vector<int> n_grid;
  int seeds = 1;
  AlgorithmSelector algorithms = AlgorithmSelector::kRope;
  std::uint64_t root_seed = 0;
  std::filesystem::path output_dir = "potlab_out";
  int threads = 0;  // 0: hardware concurrency, capped by POTLAB_THREADS
  // OPMD rows also report the mean gap over this many uniform indices.
  int opmd_gap_samples = 32;
  bool persist_policies = false;

  void validate() const;
  std::int64_t horizon(int n) const;
};

GameSpec game_spec_from_json(const Json& j, const std::string& path = "game");
Json game_spec_to_json(const GameSpec& spec);
ExperimentConfig experiment_config_from_json(const Json& j);
Json experiment_config_to_json(const ExperimentConfig& cfg);

struct SweepRow {
  std::string algorithm;
  int n = 0;
  int seed = 0;  // index within the cell
  double nash_gap = 0.0;
  double eps_pot_sum = 0.0;
  double delta_br_sum = 0.0;
  double delta_iter_sum = 0.0;
  double c_uni = 0.0;
  double c_shift = 0.0;
  double runtime = 0.0;  // seconds
  // Not part of the CSV.
  std::int64_t T = 0;
  std::int64_t t_star = 0;
  double sampled_gap = 0.0;  // OPMD: mean over sampled indices; ROPE: nash_gap
  double residual = 0.0;     // ROPE fixed-point residual
  bool converged = true;
  std::vector<int> chosen_index;  // least-squares pick per player
  ProductPolicy policy;
};

struct SlopeFit {
  std::string algorithm;
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double ci_low = 0.0;  // 95% Student-t band on the slope
  double ci_high = 0.0;
  bool ok = false;  // false when fewer than 3 usable points
  bool floor_dominated = false;  // some cell was excluded as floor
  std::vector<int> used_n;
  std::vector<int> excluded_n;
  std::vector<int> n;
  std::vector<double> median_gap;
  std::vector<double> iqr_gap;
  std::string message;
};

// Median gap per n over the rows of one algorithm, with cells whose median
// is below floor_tol excluded. Throws Error with fewer than 3 usable points.
SlopeFit fit_rate_slope(const std::vector<SweepRow>& rows,
                        const std::string& algorithm, double floor_tol);

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (algorithm, n, seed)
  std::vector<SlopeFit> slopes;
  std::vector<int> capped_n;  // n with n^2 > T_max under the n_squared rule
  double c_uni = 0.0;
  double c_shift = 0.0;
  int nonconverged = 0;
};

// Throws UncoveredError when mu misses reference mass.
SweepResult run_sweep(const ExperimentConfig& cfg);

std::string sweep_rows_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_rows_from_csv(const std::string& text);
std::string slope_csv(const std::vector<SlopeFit>& slopes);

// results.csv, slope.csv, details.json and policies/ when enabled.
void write_sweep_outputs(const SweepResult& result, const ExperimentConfig& cfg,
                         const Game& truth);

// Game built from the config's spec; shared by run_sweep and the CLI.
Game experiment_game(const ExperimentConfig& cfg);

// Worker count: cfg.threads or hardware concurrency, capped by POTLAB_THREADS.
int worker_count(int requested, std::size_t jobs);

}  // namespace potlab

#endif  // POTLAB_HARNESS_HPP_
