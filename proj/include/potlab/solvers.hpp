#ifndef POTLAB_SOLVERS_HPP_
#define POTLAB_SOLVERS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "potlab/game.hpp"

namespace potlab {

enum class RopeMethod { kDampedBestResponse, kOpmd };

struct SolverConfig {
  double eta = 1.0;
  double gamma = 0.25;
  std::int64_t max_iters = 1000;  // T for OPMD
  double fixed_point_tol = 1e-10;
  std::optional<double> smoothness_constant;  // L_Phi; m when unset
  bool certify_step = false;  // enforce gamma <= 1 / (2 L_Phi)
  double damping = 0.5;       // lambda of the damped ROPE iteration
  std::int64_t rope_max_iters = 1'000'000;
  RopeMethod rope_method = RopeMethod::kDampedBestResponse;
  std::uint64_t seed = 0;

  double smoothness(int num_players) const {
    return smoothness_constant.value_or(static_cast<double>(num_players));
  }
  void validate(int num_players) const;
};

// All players move simultaneously from the snapshot pi_t:
// pi' proportional to ref^{g/(e+g)} pi_t^{e/(e+g)} exp(e g/(e+g) Qbar).
ProductPolicy opmd_step(const Game& model, const ProductPolicy& pi_t,
                        const ProductPolicy& ref, const SolverConfig& cfg);

// One retained step: pi^(t), the quantities computed from it, and
// pi^(t+1).
struct IterateRecord {
  std::int64_t t = 0;
  ProductPolicy policy;
  std::vector<PlayerTable> q_bar;
  ProductPolicy best_response;
  ProductPolicy next;
};

// Per-step scalars. step_l1 is sum_i max_x ||pi_i^(t+1) - pi_i^(t)||_1;
// step_l1_sq is sum_i E_rho ||.||_1^2. These are the norms under which the
// per-step ascent bound holds with several contexts; with one context they
// reduce to the plain L1 norms.
struct StepScalars {
  std::int64_t t = 0;
  double phi_reg = 0.0;       // at pi^(t); NaN without a potential
  double phi_reg_next = 0.0;  // at pi^(t+1)
  double step_l1 = 0.0;
  double step_l1_sq = 0.0;
  double max_gibbs_ratio = 0.0;  // over pi^(t+1)
  double loglinear_dev = 0.0;    // max per-context L1 deviation
  double br_l1 = 0.0;            // sum_i E_rho ||pi^(t) - pi_dagger^(t)||_1
};

struct RunningStats {
  std::int64_t steps = 0;
  double sum_step_l1 = 0.0;
  double sum_step_l1_sq = 0.0;
  double max_gibbs_ratio = 0.0;
  double max_loglinear_dev = 0.0;
  double sum_br_l1 = 0.0;
  double min_entry = 1.0;
};

struct OpmdOptions {
  std::int64_t retain_limit = 10'000;
  // Extra iterate indices to keep regardless of thinning.
  std::vector<std::int64_t> pinned;
  bool full_series = false;  // keep StepScalars for every step
  bool last_iterate = false;  // output pi^(T+1) instead of pi^(t*)
};

struct OpmdTrajectory {
  std::int64_t T = 0;
  std::int64_t thinning = 1;  // every thinning-th step retained
  std::vector<IterateRecord> retained;  // sorted by t
  std::vector<StepScalars> series;      // sorted by t
  RunningStats stats;
  bool has_potential = false;
  std::int64_t output_index = 1;  // t*
  ProductPolicy output;
  ProductPolicy final_policy;  // pi^(T+1)

  const IterateRecord* find(std::int64_t t) const;
};

// T = cfg.max_iters steps of OPMD on the model game (whose payoffs are the
// estimates). t* ~ Uniform{1..T} from cfg.seed.
OpmdTrajectory run_opmd(const Game& model, const ProductPolicy& ref,
                        const SolverConfig& cfg,
                        const OpmdOptions& options = {});

// The t* draw run_opmd makes for a given config.
std::int64_t draw_output_index(const SolverConfig& cfg);

struct RopeSolution {
  ProductPolicy policy;
  std::vector<double> residual;  // per player, max over contexts
  double max_residual = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  std::vector<std::vector<double>> values;  // Vhat_i(x)
};

// Regularized NE of the model game. The damped route iterates
// pi <- (1 - lambda) pi + lambda BR(pi) until the L1 residual is within
// tolerance. On failure the lowest-residual iterate is returned with
// converged = false.
RopeSolution solve_rope(const Game& model, const ProductPolicy& ref,
                        const SolverConfig& cfg);

// max_x ||pi_i - BR_i(pi_-i)||_1 for each player.
std::vector<double> fixed_point_residual(const Game& model,
                                         const ProductPolicy& pi,
                                         const ProductPolicy& ref,
                                         double eta);

// E_{rho, pi} Phi - eta^-1 sum_i E_rho KL(pi_i || ref_i).
double regularized_empirical_potential(const JointTable& phi,
                                       const Game& model,
                                       const ProductPolicy& pi,
                                       const ProductPolicy& ref, double eta);
double regularized_empirical_potential(const Game& model,
                                       const ProductPolicy& pi,
                                       const ProductPolicy& ref, double eta);

// t,player,context,action,prob for every retained iterate.
std::string trajectory_policies_csv(const OpmdTrajectory& traj,
                                    const Game& model);
// t,phi_reg,sum_step_l1,sum_step_l1_sq,max_gibbs_ratio.
std::string trajectory_scalars_csv(const OpmdTrajectory& traj);

}  // namespace potlab

#endif  // POTLAB_SOLVERS_HPP_
