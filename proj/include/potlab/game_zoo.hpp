#ifndef POTLAB_GAME_ZOO_HPP_
#define POTLAB_GAME_ZOO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "potlab/game.hpp"

namespace potlab {

enum class GameFamily { kTeam, kPerturbedTeam, kCongestion, kRandomGeneralSum };

std::string family_name(GameFamily f);
GameFamily family_from_name(const std::string& name);

struct GameSpec {
  GameFamily family = GameFamily::kTeam;
  int num_players = 2;
  int num_contexts = 1;
  std::vector<int> action_counts = {2, 2};
  double perturbation_scale = 0.0;
  std::uint64_t seed = 0;
  // Base rewards are drawn uniform on [reward_lo, reward_hi]. The default is
  // [0, 1]; fixtures shrink it so observation noise never clips.
  double reward_lo = 0.0;
  double reward_hi = 1.0;

  void validate() const;
};

// Contexts are "x0", "x1", ... with uniform distribution in every family.
Game make_game(const GameSpec& spec);
Game make_team_game(const GameSpec& spec);
Game make_perturbed_team_game(const GameSpec& spec);
Game make_congestion_game(const GameSpec& spec);
Game make_random_general_sum(const GameSpec& spec);

// Congestion game from explicit costs[x][resource][load - 1], each
// nondecreasing in load with entries in [0, 1].
Game congestion_game_from_costs(
    const std::vector<std::vector<std::vector<double>>>& costs,
    int num_players);

inline constexpr long long kMaxAlphaEvaluations = 10'000'000;

// Number of pure (base profile, deviation) pairs estimate_alpha visits.
long long alpha_enumeration_size(const JointActionSpace& space,
                                 int num_contexts);

// sup over (i, pi, pi_i') of |(J_i(pi_i', pi_-i) - J_i(pi)) -
// (Phi(pi_i', pi_-i) - Phi(pi))|. Payoff differences are taken on the
// unregularized tables; the KL terms cancel against those of Phi_reg.
// Per context the mismatch is multilinear, so its extremes are pure; the
// contexts decouple, so the sup is sum_x rho(x) times the per-context max.
double estimate_alpha(const Game& game, const JointTable& phi);

// |Delta J_i - Delta Phi| for one unilateral deviation, by exact expectation.
double unilateral_mismatch(const Game& game, const JointTable& phi,
                           const ProductPolicy& pi, int player,
                           const PlayerTable& deviation);

}  // namespace potlab

#endif  // POTLAB_GAME_ZOO_HPP_
