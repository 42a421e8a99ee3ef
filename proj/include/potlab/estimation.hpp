#ifndef POTLAB_ESTIMATION_HPP_
#define POTLAB_ESTIMATION_HPP_

#include <cstdint>
#include <vector>

#include "potlab/game.hpp"
#include "potlab/io.hpp"
#include "potlab/offline.hpp"

namespace potlab {

// Finite per-player hypothesis sets of reward tables.
struct FunctionClass {
  std::vector<std::vector<JointTable>> candidates;  // [player][k]
  bool realizable = false;
  std::vector<int> duplicates_removed;  // per player

  int size(int player) const {
    return static_cast<int>(candidates[player].size());
  }
  std::uint64_t hash(int player) const;
};

struct QEstimate {
  int player = 0;
  JointTable table;
  int chosen_index = 0;
  double empirical_loss = 0.0;  // sum of squared residuals
  std::uint64_t class_hash = 0;
};

// Truth plus num_distractors copies clip(r_i + U[-s, s]). Exact duplicates
// are dropped and counted. Candidate 0 is always the truth.
FunctionClass build_tabular_class(const Game& game, int num_distractors,
                                  double perturb_scale, std::uint64_t seed);

// Exhaustive least squares; the lowest index wins exact ties.
QEstimate least_squares_fit(const Dataset& data, const FunctionClass& cls,
                            int player);
std::vector<QEstimate> least_squares_fit_all(const Dataset& data,
                                             const FunctionClass& cls);

// Pointwise error Z_i = Qhat_i - r_i.
JointTable residual(const QEstimate& q_hat, const Game& game);

// E_mu[Z_i^2] = sum_{x,a} rho(x) mu(a|x) (Qhat - r)^2.
double in_sample_sq_error(const QEstimate& q_hat, const Game& game,
                          const BehaviorDistribution& mu);

std::vector<JointTable> estimate_tables(const std::vector<QEstimate>& est);

// Empirical game with Qhat as payoffs. When the truth carries a potential it
// is kept and the bias alpha is re-measured against the new payoffs.
Game empirical_game(const Game& truth, const std::vector<QEstimate>& est);

struct FastRateReport {
  int trials = 0;
  int passes = 0;
  double fraction = 0.0;
  double threshold = 0.0;  // 30 ln(2 |class| / delta) / n
  double worst_error = 0.0;
  bool pass = false;
};

// Repeats fit-and-evaluate with fresh datasets; trial k uses seed
// derive_seed(seed, "fast_rate", k). A trial passes when every player's
// E_mu[Z^2] is within the threshold. Pass iff fraction >= 1 - delta.
FastRateReport check_fast_rate_bound(int trials, int n,
                                     const FunctionClass& cls,
                                     const Game& game,
                                     const BehaviorDistribution& mu,
                                     double delta, double noise_sigma,
                                     std::uint64_t seed);

Json function_class_to_json(const FunctionClass& cls, const Game& game);
FunctionClass function_class_from_json(const Json& j, const Game& game);
Json estimates_to_json(const std::vector<QEstimate>& est, const Game& game);
std::vector<QEstimate> estimates_from_json(const Json& j, const Game& game);

}  // namespace potlab

#endif  // POTLAB_ESTIMATION_HPP_
