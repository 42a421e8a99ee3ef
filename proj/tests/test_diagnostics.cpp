#include <gtest/gtest.h>

#include <cmath>

#include "potlab/diagnostics.hpp"
#include "potlab/error.hpp"
#include "potlab/game_core.hpp"
#include "test_util.hpp"

namespace potlab {
namespace {

using testing::row_table;
using testing::single_player_game;

TEST(Pinsker, EqualDistributionsAreTight) {
  const auto r = check_pinsker({{{0.3, 0.7}, {0.3, 0.7}}});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.worst_violation, 0.0);
}

TEST(Pinsker, PointMassAgainstUniform) {
  const auto r = check_pinsker({{{1.0, 0.0}, {0.5, 0.5}}});
  EXPECT_TRUE(r.pass);
  // 0.5 * 1^2 - ln 2
  EXPECT_NEAR(r.worst_violation, 0.5 - std::log(2.0), 1e-15);
}

TEST(Pinsker, RandomSweep) {
  const auto r = check_pinsker(random_distribution_pairs(1000, 1));
  EXPECT_EQ(r.instances, 1000);
  EXPECT_TRUE(r.pass);
}

TEST(BregmanSmoothness, SameLogitsGiveZero) {
  const auto r = check_bregman_smoothness({{{0.1, 2.0}, {0.1, 2.0}}});
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.worst_violation, 0.0, 1e-15);
}

TEST(BregmanSmoothness, UnitShiftClosedForm) {
  const auto r = check_bregman_smoothness({{{0.0, 0.0}, {1.0, 0.0}}});
  const double d = std::log((std::exp(1.0) + 1) / 2) - 0.5;
  EXPECT_NEAR(d, 0.12011, 1e-5);
  // Lower side 0 - D = -0.12 beats upper side D - 0.5 = -0.38.
  EXPECT_NEAR(r.worst_violation, -d, 1e-15);
  EXPECT_TRUE(r.pass);
}

TEST(BregmanSmoothness, RandomSweep) {
  EXPECT_TRUE(check_bregman_smoothness(random_logit_pairs(1000, 2)).pass);
}

TEST(ValueGapBound, TruthGivesZero) {
  auto fx = random_evaluation_fixtures(5, 3);
  for (auto& f : fx) f.q_hat = f.truth.rewards();
  const auto r = check_value_gap_bound(fx);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.worst_violation, 0.0, 1e-15);
}

TEST(ValueGapBound, ConstantShiftClosedForm) {
  const Game g = single_player_game({0.3, 0.6});
  const ProductPolicy ref = ProductPolicy::uniform(g);
  JointTable shifted = g.reward(0);
  for (double& v : shifted.data()) v += 0.1;
  const EvaluationFixture f{g, {shifted}, ref, ref, 1.0};
  const auto r = check_value_gap_bound({f});
  // LHS = -0.1 exactly (log-partition shifts by the constant); RHS = -0.1 +
  // 0.5 * 0.01.
  EXPECT_NEAR(r.worst_violation, -0.1 - (-0.1 + 0.005), 1e-15);
  EXPECT_TRUE(r.pass);
}

TEST(ValueGapBound, RandomSweep) {
  EXPECT_TRUE(check_value_gap_bound(random_evaluation_fixtures(100, 4)).pass);
}

OpmdTrajectory single_player_trajectory(std::vector<double> r, double eta,
                                        double gamma, std::int64_t T) {
  const Game g = single_player_game(std::move(r));
  SolverConfig c;
  c.eta = eta;
  c.gamma = gamma;
  c.max_iters = T;
  OpmdOptions o;
  o.full_series = true;
  return run_opmd(g, ProductPolicy::uniform(g), c, o);
}

TEST(L1Proportionality, SinglePlayerClosedForm) {
  // eta = gamma = 1: pi^(2) is the normalized sqrt(pi^(1) pi_dagger).
  const OpmdTrajectory t = single_player_trajectory({1.0, 0.0}, 1.0, 1.0, 1);
  const auto& rec = t.retained.front();
  const double e = std::exp(1.0);
  const double b0 = e / (e + 1), b1 = 1 / (e + 1);
  const double n0 = std::sqrt(0.5 * b0) / (std::sqrt(0.5 * b0) + std::sqrt(0.5 * b1));
  EXPECT_NEAR(rec.next.at(0, 0)[0], n0, 1e-15);
  const double lhs = 2 * std::abs(0.5 - b0);
  const double rhs = 4.0 / b1 * 2.0 * 2 * std::abs(0.5 - n0);
  SolverConfig c;
  c.eta = c.gamma = 1.0;
  const auto r = check_l1_proportionality(t, c);
  EXPECT_NEAR(r.worst_violation, lhs - rhs, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(L1Proportionality, FixedPointIsZeroOnZero) {
  // Constant rewards: ref is already the best response and never moves.
  const OpmdTrajectory t = single_player_trajectory({0.5, 0.5}, 1.0, 0.5, 3);
  SolverConfig c;
  c.gamma = 0.5;
  const auto r = check_l1_proportionality(t, c);
  EXPECT_NEAR(r.worst_violation, 0.0, 1e-15);
}

TEST(PotentialAscent, TeamFixtureMonotone) {
  const Game g = make_game(team_fixture_spec());
  SolverConfig c;
  c.gamma = 0.25;
  c.max_iters = 2000;
  c.certify_step = true;
  OpmdOptions o;
  o.full_series = true;
  const auto t = run_opmd(g, ProductPolicy::uniform(g), c, o);
  EXPECT_TRUE(check_potential_ascent(t, g, c).pass);
  EXPECT_TRUE(check_potential_monotone(t).pass);
  EXPECT_EQ(check_potential_ascent(t, g, c).details["steps_using_alpha_allowance"], 0);
}

TEST(PotentialAscent, PerturbedWithinAllowance) {
  const Game g = make_game(perturbed_team_fixture_spec());
  SolverConfig c;
  c.gamma = 0.25;
  c.max_iters = 2000;
  OpmdOptions o;
  o.full_series = true;
  const auto t = run_opmd(g, ProductPolicy::uniform(g), c, o);
  EXPECT_TRUE(check_potential_ascent(t, g, c).pass);
}

TEST(PotentialAscent, NeedsPotential) {
  const Game g = single_player_game({0.2, 0.8});
  SolverConfig c;
  c.max_iters = 5;
  const auto t = run_opmd(g, ProductPolicy::uniform(g), c);
  EXPECT_THROW(check_potential_ascent(t, 0.0, c, 1), Error);
  EXPECT_THROW(check_potential_monotone(t), Error);
}

TEST(EpsPotIdentity, ClosedFormInstance) {
  const Game g = single_player_game({1.0, 0.0});
  const ProductPolicy ref = ProductPolicy::uniform(g);
  const double e = std::exp(1.0);
  const double rhs = kl_divergence(std::vector<double>{0.5, 0.5},
                                   std::vector<double>{e / (e + 1), 1 / (e + 1)});
  EXPECT_NEAR(rhs, 0.12011, 1e-5);
  const auto r = check_eps_pot_identity(g, {ref}, ref, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.witness["value_gap"].get<double>(), 0.12011, 1e-5);
  EXPECT_NEAR(r.witness["kl_over_eta"].get<double>(), rhs, 1e-15);
}

TEST(EpsPotIdentity, BestResponseIsZero) {
  const Game g = single_player_game({1.0, 0.0});
  const ProductPolicy ref = ProductPolicy::uniform(g);
  const ProductPolicy br({regularized_best_response(row_table({1.0, 0.0}), ref.player(0), 1.0)});
  const auto r = check_eps_pot_identity(g, {br}, ref, 1.0);
  EXPECT_NEAR(r.witness["value_gap"].get<double>(), 0.0, 1e-15);
}

RopeSolution solve(const Game& model, const ProductPolicy& ref, double tol) {
  SolverConfig c;
  c.fixed_point_tol = tol;
  return solve_rope(model, ref, c);
}

TEST(BiasCancellation, TruthHasNoMismatch) {
  const Game g = make_game(perturbed_team_fixture_spec());
  const ProductPolicy ref = ProductPolicy::uniform(g);
  const auto r = check_bias_cancellation(solve(g, ref, 1e-10), g.rewards(), g, ref, 1.0);
  EXPECT_EQ(r.details["max_abs_mismatch"].get<double>(), 0.0);
}

TEST(BiasCancellation, TracksResidualAtLooseTolerance) {
  const Game truth = make_game(perturbed_team_fixture_spec());
  const ProductPolicy ref = ProductPolicy::uniform(truth);
  const FunctionClass cls = build_tabular_class(truth, 1, 0.2, 3);
  std::vector<JointTable> q_hat{cls.candidates[0].back(), cls.candidates[1].back()};
  const Game model = truth.with_rewards(q_hat);
  for (double tol : {1e-2, 1e-4, 1e-6, 1e-10}) {
    const auto rope = solve(model, ref, tol);
    ASSERT_TRUE(rope.converged);
    const auto r = check_bias_cancellation(rope, q_hat, truth, ref, 1.0);
    EXPECT_TRUE(r.pass) << tol;
    EXPECT_LE(r.details["max_abs_mismatch"].get<double>(), tol * 0.2 + 1e-12);
  }
}

TEST(AlphaGradient, TeamGameIsZero) {
  const auto r = check_alpha_gradient(make_game(team_fixture_spec()), 50, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.details["worst_inner_product"].get<double>(), 0.0, 1e-15);
}

TEST(AlphaGradient, PerturbedWithinDeclaredAlpha) {
  const Game g = make_game(perturbed_team_fixture_spec());
  const auto r = check_alpha_gradient(g, 100, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.details["worst_inner_product"].get<double>(), *g.declared_alpha() + 1e-10);
}

TEST(AlphaGradient, RewardShiftInvariance) {
  Game g = make_game(perturbed_team_fixture_spec());
  std::vector<JointTable> shifted = g.rewards();
  for (double& v : shifted[0].data()) v -= 0.2;
  Game h = g.with_rewards(shifted);
  h.set_potential(*g.potential(), *g.declared_alpha());
  const auto a = check_alpha_gradient(g, 30, 5);
  const auto b = check_alpha_gradient(h, 30, 5);
  EXPECT_NEAR(a.details["worst_inner_product"].get<double>(),
              b.details["worst_inner_product"].get<double>(), 1e-14);
}

TEST(ConcentrabilityChain, ZeroResidual) {
  const Game g = make_game(team_fixture_spec());
  const ProductPolicy ref = ProductPolicy::uniform(g);
  const auto mu = uniform_mixture_behavior(g, ref, 1.0);
  const auto r = check_concentrability_chain(g, mu, ref, g.rewards(), ref, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.worst_violation, 0.0);
}

TEST(ConcentrabilityChain, SinglePlayerClosedForm) {
  const Game g = single_player_game({0.5, 0.5});
  const ProductPolicy ref = ProductPolicy::uniform(g);
  const auto mu = uniform_mixture_behavior(g, ref, 1.0);
  JointTable q = g.reward(0);
  q(0, 0) += 0.1;
  q(0, 1) -= 0.1;
  const auto r = check_concentrability_chain(g, mu, ref, {q}, ref, 1.0);
  // LHS = 0.5 * 0.01; RHS = 0.5 * 1 * 2 * 0.01.
  EXPECT_NEAR(r.witness["lhs"].get<double>(), 0.005, 1e-15);
  EXPECT_NEAR(r.witness["rhs"].get<double>(), 0.01, 1e-15);
  EXPECT_TRUE(r.pass);
}

TEST(ConcentrabilityChain, RandomGibbsFixtures) {
  const auto fx = random_evaluation_fixtures(100, 9, true);
  for (const auto& f : fx) {
    const auto mu = uniform_mixture_behavior(f.truth, f.ref, 0.5);
    EXPECT_TRUE(check_concentrability_chain(f.truth, mu, f.ref, f.q_hat, f.pi, f.eta).pass);
  }
}

TEST(GapDecompositionCheck, RandomFixtures) {
  EXPECT_TRUE(check_gap_decomposition(random_evaluation_fixtures(50, 10)).pass);
}

TEST(BrDistanceTrend, SlopeOnTeamFixture) {
  const Game g = make_game(team_fixture_spec());
  SolverConfig c;
  c.gamma = 0.25;
  const auto trend = br_distance_trend(g, ProductPolicy::uniform(g), c, {100, 1000, 10000});
  EXPECT_TRUE(check_br_distance_trend(trend).pass);
  EXPECT_LE(trend.slope, -0.4);
}

TEST(CertifiedEpsFp, BoundsVariationalGap) {
  const auto fx = random_evaluation_fixtures(30, 12);
  for (const auto& f : fx) {
    const Game model = f.truth.with_rewards(f.q_hat);
    const auto d = gap_decomposition(model, f.q_hat, f.pi, f.ref, f.eta);
    EXPECT_LE(d.eps_pot_sum(), certified_eps_fp(model, f.pi, f.ref, f.eta) + 1e-12);
  }
}

TEST(Suite, EveryCheckPasses) {
  for (const auto& r : run_diagnostics_suite(std::nullopt, kDiagnosticsSeed)) {
    EXPECT_TRUE(r.pass) << r.name << " worst " << r.worst_violation;
    EXPECT_GT(r.instances, 0) << r.name;
  }
}

TEST(Suite, FilterAndUnknownName) {
  const auto one = run_diagnostics_suite(std::string("pinsker"), 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].name, "pinsker");
  EXPECT_THROW(run_diagnostics_suite(std::string("nope"), 1), Error);
}

TEST(Suite, CsvSummary) {
  const auto one = run_diagnostics_suite(std::string("pinsker"), 1);
  const std::string csv = reports_summary_csv(one);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "name,instances,worst_violation,tolerance,pass");
  EXPECT_EQ(report_to_json(one[0])["name"], "pinsker");
}

}  // namespace
}  // namespace potlab
