#ifndef POTLAB_GAME_CORE_HPP_
#define POTLAB_GAME_CORE_HPP_

#include <span>
#include <vector>

#include "potlab/game.hpp"

namespace potlab {

// KL(p || q) in nats with 0 ln 0 = 0. Throws on length mismatch or when
// q(a) = 0 < p(a) ("absolute continuity violated").
double kl_divergence(std::span<const double> p, std::span<const double> q);

// ln sum_a exp(z_a), max-subtracted.
double log_sum_exp(std::span<const double> z);

// Qbar_i(x, a_i) = E_{a_-i ~ pi_-i(.|x)} q(x, a_i, a_-i). Only the opponent
// tables of `players` are read.
PlayerTable marginal_q(const JointTable& q, const JointActionSpace& space,
                       std::span<const PlayerTable> players, int player);
PlayerTable marginal_q(const JointTable& q, const JointActionSpace& space,
                       const ProductPolicy& pi, int player);
// Allocation-free variant; `out` must already have the right shape.
void marginal_q_into(const JointTable& q, const JointActionSpace& space,
                     std::span<const PlayerTable> players, int player,
                     PlayerTable& out);

// E_{a ~ pi(.|x)} t(x, a) for one context.
double expected_in_context(const JointTable& t, const JointActionSpace& space,
                           std::span<const PlayerTable> players, int x);
// E_{x ~ rho, a ~ pi} t(x, a).
double expected_value(const JointTable& t, const JointActionSpace& space,
                      std::span<const PlayerTable> players,
                      std::span<const double> rho);

// pi_dagger(a|x) proportional to ref(a|x) exp(eta Qbar(x,a)).
PlayerTable regularized_best_response(const PlayerTable& q_bar,
                                      const PlayerTable& ref, double eta);

// V_dagger(x) = eta^-1 ln sum_a ref(a|x) exp(eta Qbar(x,a)), the maximum of
// <pi, Qbar> - eta^-1 KL(pi || ref) over the simplex.
std::vector<double> best_response_value(const PlayerTable& q_bar,
                                        const PlayerTable& ref, double eta);

struct RegularizedValueReport {
  std::vector<double> per_context_values;
  double global_return = 0.0;
};

RegularizedValueReport regularized_value(const Game& game,
                                         const ProductPolicy& pi,
                                         const ProductPolicy& ref, double eta,
                                         int player);

struct NashGapReport {
  double gap = 0.0;
  std::vector<double> per_player;  // E_rho[V_dagger - V], unclamped
  bool clamped = false;            // total was in [-1e-10, 0) and set to 0
};

inline constexpr double kGapClampTol = 1e-10;

// Sum_i E_rho[V_i^dagger - V_i^pi] with the game's rewards.
double nash_gap(const Game& game, const ProductPolicy& pi,
                const ProductPolicy& ref, double eta);
NashGapReport nash_gap_report(const Game& game, const ProductPolicy& pi,
                              const ProductPolicy& ref, double eta);

struct GapDecomposition {
  std::vector<double> eps_pot;     // E_rho[Vhat_dagger - Vhat]
  std::vector<double> delta_br;    // E_rho[V_dagger - Vhat_dagger]
  std::vector<double> delta_iter;  // E_rho[Vhat - V]
  double total_gap = 0.0;

  double eps_pot_sum() const;
  double delta_br_sum() const;
  double delta_iter_sum() const;
};

// Splits the gap of pi into the three per-player parts. Hatted values use
// q_hat, the others the game's rewards.
GapDecomposition gap_decomposition(const Game& game,
                                   std::span<const JointTable> q_hat,
                                   const ProductPolicy& pi,
                                   const ProductPolicy& ref, double eta);

// Sum_i E_rho[max_a Qbar_i - <pi_i, Qbar_i>] without the KL term.
double unregularized_exploitability(const Game& game, const ProductPolicy& pi);

}  // namespace potlab

#endif  // POTLAB_GAME_CORE_HPP_
