#ifndef POTLAB_DIAGNOSTICS_HPP_
#define POTLAB_DIAGNOSTICS_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "potlab/estimation.hpp"
#include "potlab/game.hpp"
#include "potlab/game_zoo.hpp"
#include "potlab/io.hpp"
#include "potlab/offline.hpp"
#include "potlab/solvers.hpp"

namespace potlab {

// worst_violation is signed: lhs - rhs of the asserted inequality, so a
// positive value means it failed by that much. pass <=> worst <= tolerance.
struct CheckReport {
  std::string name;
  double tolerance = 0.0;
  std::int64_t instances = 0;
  double worst_violation = -std::numeric_limits<double>::infinity();
  bool pass = true;
  Json witness = Json::object();
  Json details = Json::object();

  // Records one instance; keeps the witness of the worst one.
  void observe(double violation, const std::function<Json()>& witness_fn);
  void finish();
  // Folds another report of the same check into this one.
  void merge(const CheckReport& other);
};

using DistributionPair = std::pair<std::vector<double>, std::vector<double>>;

// Fixed fixtures. The team fixture: 2 players, 2 contexts, 2 actions each,
// rewards in [0.25, 0.75]. The perturbed fixture adds per-player noise.
GameSpec team_fixture_spec();
GameSpec perturbed_team_fixture_spec(double scale = 0.1);

inline constexpr std::uint64_t kDiagnosticsSeed = 20240917;

std::vector<DistributionPair> random_distribution_pairs(int count,
                                                        std::uint64_t seed);
// Pairs (theta, theta') with ||theta' - theta||_inf <= radius.
std::vector<DistributionPair> random_logit_pairs(int count, std::uint64_t seed,
                                                 double radius = 3.0);

// KL(p||q) >= 0.5 ||p - q||_1^2 - 1e-12.
CheckReport check_pinsker(const std::vector<DistributionPair>& pairs);
// 0 <= D_lse(theta' || theta) <= 0.5 ||theta' - theta||_inf^2, both 1e-12.
CheckReport check_bregman_smoothness(
    const std::vector<DistributionPair>& logit_pairs);

struct EvaluationFixture {
  Game truth;
  std::vector<JointTable> q_hat;
  ProductPolicy pi;
  ProductPolicy ref;
  double eta = 1.0;
};

std::vector<EvaluationFixture> random_evaluation_fixtures(
    int count, std::uint64_t seed, bool gibbs_policies = false);

// V_dagger - Vhat_dagger <= E_{pihat_dagger}[Qbar - Qhatbar]
//   + (eta / 2) ||Qbar - Qhatbar||_inf^2 per (i, x), tolerance 1e-10.
CheckReport check_value_gap_bound(const std::vector<EvaluationFixture>& fx);

// ||pi^t - pi_dagger^t||_1 <= (4 / nu) ((eta + gamma) / gamma)
//   ||pi^t - pi^(t+1)||_1 on each retained step, nu the realized floor of
// the three vectors; tolerance 1e-10.
CheckReport check_l1_proportionality(const OpmdTrajectory& traj,
                                     const SolverConfig& cfg);

// Phi_reg(t+1) - Phi_reg(t) >= (L/2) step_l1_sq - alpha step_l1 - 1e-9 on
// every recorded step.
CheckReport check_potential_ascent(const OpmdTrajectory& traj, double alpha,
                                   const SolverConfig& cfg, int num_players);
CheckReport check_potential_ascent(const OpmdTrajectory& traj,
                                   const Game& model_with_potential,
                                   const SolverConfig& cfg);
// Phi_reg(t+1) >= Phi_reg(t) - 1e-9.
CheckReport check_potential_monotone(const OpmdTrajectory& traj);

// |(Vhat_dagger - Vhat) - eta^-1 KL(pi || pi_dagger)| <= 1e-10 per (i, x).
CheckReport check_eps_pot_identity(const OpmdTrajectory& traj,
                                   const ProductPolicy& ref, double eta);
CheckReport check_eps_pot_identity(const Game& model,
                                   const std::vector<ProductPolicy>& policies,
                                   const ProductPolicy& ref, double eta);

// |E_rho <pihat_i - pihat_dagger_i, Zbar_i>| <= rho_fp ||Z_i||_inf + 1e-12.
CheckReport check_bias_cancellation(const RopeSolution& rope,
                                    const std::vector<JointTable>& q_hat,
                                    const Game& truth,
                                    const ProductPolicy& ref, double eta);

// sup over pure per-context pairs of |<grad J_i - grad Phi, pi' - pi>| <=
// declared_alpha + 1e-10 at random base profiles.
CheckReport check_alpha_gradient(const Game& game, int num_base_profiles,
                                 std::uint64_t seed);

// (eta/2) E_rho ||Qbar - Qhatbar||_inf^2 <= (eta C_shift C_uni / 2)
//   E_mu[Z^2] + 1e-12 per player.
CheckReport check_concentrability_chain(const Game& game,
                                        const BehaviorDistribution& mu,
                                        const ProductPolicy& ref,
                                        const std::vector<JointTable>& q_hat,
                                        const ProductPolicy& pi, double eta);

// Per-context L1 deviation from the geometric mixture, <= 1e-12. Uses the
// running maximum over all steps and recomputes it on retained records.
CheckReport check_loglinear_identity(const OpmdTrajectory& traj,
                                     const SolverConfig& cfg);
// max pi/ref over all iterates <= e^eta + 1e-9.
CheckReport check_gibbs_closure(const OpmdTrajectory& traj, double eta);

// Upper bound on sum_i E_rho[Vhat_dagger - Vhat] at pi from its fixed-point
// residual alone: by the variational identity each term is
// eta^-1 KL(pi || pi_dagger) <= eta^-1 ||pi - pi_dagger||_1^2 / min pi_dagger.
double certified_eps_fp(const Game& model, const ProductPolicy& pi,
                        const ProductPolicy& ref, double eta);

// |sum of parts - nash gap| <= 1e-10.
CheckReport check_gap_decomposition(const std::vector<EvaluationFixture>& fx);

struct TrendResult {
  std::vector<std::int64_t> horizons;
  std::vector<double> averages;  // (1/T) sum_t sum_i E_rho ||pi^t - pi_dagger^t||_1
  double slope = 0.0;
};

// Time-averaged iterate-to-best-response distance for each horizon and its
// log-log slope; passes when slope <= max_slope.
TrendResult br_distance_trend(const Game& model, const ProductPolicy& ref,
                             const SolverConfig& cfg,
                             const std::vector<std::int64_t>& horizons);
CheckReport check_br_distance_trend(const TrendResult& trend,
                                   double max_slope = -0.4);

CheckReport fast_rate_report(const FastRateReport& r, double delta, int n);

// Names accepted by run_diagnostics_suite's filter.
const std::vector<std::string>& diagnostic_names();

// Runs every named check on the published fixtures (or just `only`).
std::vector<CheckReport> run_diagnostics_suite(
    const std::optional<std::string>& only, std::uint64_t seed);

Json report_to_json(const CheckReport& r);
std::string reports_summary_csv(const std::vector<CheckReport>& reports);

}  // namespace potlab

#endif  // POTLAB_DIAGNOSTICS_HPP_
