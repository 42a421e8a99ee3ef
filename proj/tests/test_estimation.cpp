#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "potlab/diagnostics.hpp"
#include "potlab/error.hpp"
#include "potlab/estimation.hpp"
#include "potlab/game_zoo.hpp"
#include "potlab/offline.hpp"
#include "potlab/rng.hpp"

namespace potlab {
namespace {

Game fixture() { return make_game(team_fixture_spec()); }

BehaviorDistribution uniform_mu(const Game& g) {
  return uniform_mixture_behavior(g, ProductPolicy::uniform(g), 1.0);
}

TEST(FunctionClass, NoDistractorsIsSingleton) {
  const FunctionClass c = build_tabular_class(fixture(), 0, 0.3, 1);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(c.size(i), 1);
    EXPECT_EQ(c.candidates[i][0], fixture().reward(i));
  }
  EXPECT_TRUE(c.realizable);
}

TEST(FunctionClass, SizeIsDistractorsPlusOne) {
  const FunctionClass c = build_tabular_class(fixture(), 15, 0.3, 1);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(c.size(i) + c.duplicates_removed[i], 16);
    EXPECT_EQ(c.duplicates_removed[i], 0);
  }
}

TEST(FunctionClass, ZeroScaleDeduplicatesToSingleton) {
  const FunctionClass c = build_tabular_class(fixture(), 5, 0.0, 1);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(c.size(i), 1);
    EXPECT_EQ(c.duplicates_removed[i], 5);
  }
}

TEST(FunctionClass, CandidatesStayInUnitInterval) {
  const FunctionClass c = build_tabular_class(fixture(), 20, 0.9, 4);
  for (const auto& per : c.candidates) {
    for (const auto& t : per) {
      for (double v : t.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(LeastSquares, NoiselessRealizablePicksTruth) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 15, 0.3, 2);
  for (int n : {1, 5, 50}) {
    const Dataset d = sample_dataset(g, uniform_mu(g), n, 9);
    for (const auto& e : least_squares_fit_all(d, c)) {
      EXPECT_EQ(e.chosen_index, 0);
      EXPECT_EQ(e.empirical_loss, 0.0);
      EXPECT_EQ(e.table, g.reward(e.player));
    }
  }
}

TEST(LeastSquares, HandSummedLossesOnTwoCandidates) {
  const Game g = fixture();
  FunctionClass c;
  c.realizable = true;
  c.duplicates_removed = {0, 0};
  for (int i = 0; i < 2; ++i) {
    JointTable shifted = g.reward(i);
    for (double& v : shifted.data()) v = std::min(1.0, v + 0.3);
    c.candidates.push_back({g.reward(i), shifted});
  }
  const Dataset d = sample_dataset(g, uniform_mu(g), 10, 3);
  // Hand-rolled sum of squared residuals for each candidate.
  for (int i = 0; i < 2; ++i) {
    std::vector<double> loss(2, 0.0);
    for (int k = 0; k < 2; ++k) {
      for (const auto& s : d.samples) {
        const double r = s.rewards[i] - c.candidates[i][k](s.context, s.joint);
        loss[k] += r * r;
      }
    }
    const QEstimate e = least_squares_fit(d, c, i);
    EXPECT_EQ(e.chosen_index, 0);
    EXPECT_NEAR(e.empirical_loss, loss[0], 1e-12);
    EXPECT_GT(loss[1], loss[0]);
  }
}

TEST(LeastSquares, TiesGoToLowestIndex) {
  const Game g = fixture();
  FunctionClass c;
  c.duplicates_removed = {0, 0};
  // Two candidates tied on every sample: both differ from the truth by +-d on
  // a joint action never sampled, and agree elsewhere.
  const Dataset d = [&] {
    BehaviorDistribution mu{"one cell", JointTable(2, 4, 0.0)};
    mu.table(0, 0) = mu.table(1, 0) = 1.0;
    return sample_dataset(g, mu, 20, 1, 0.1);
  }();
  for (int i = 0; i < 2; ++i) {
    JointTable a = g.reward(i), b = g.reward(i);
    a(0, 3) = 0.1;
    b(0, 3) = 0.9;
    c.candidates.push_back({a, b});
  }
  EXPECT_EQ(least_squares_fit(d, c, 0).chosen_index, 0);
}

TEST(LeastSquares, EmptyDatasetIsAnError) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 1, 0.3, 2);
  Dataset empty;
  EXPECT_THROW(least_squares_fit(empty, c, 0), Error);
}

TEST(InSampleError, TruthIsZero) {
  const Game g = fixture();
  QEstimate e;
  e.player = 0;
  e.table = g.reward(0);
  EXPECT_EQ(in_sample_sq_error(e, g, uniform_mu(g)), 0.0);
}

TEST(InSampleError, ConstantShift) {
  const Game g = fixture();  // rewards in [0.25, 0.75]
  QEstimate e;
  e.player = 1;
  e.table = g.reward(1);
  for (double& v : e.table.data()) v += 0.1;
  const auto mu = uniform_mixture_behavior(g, ProductPolicy::uniform(g), 0.3);
  EXPECT_NEAR(in_sample_sq_error(e, g, mu), 0.01, 1e-15);
}

TEST(InSampleError, MatchesDoubleSum) {
  const Game g = fixture();
  Rng rng(5);
  QEstimate e;
  e.player = 0;
  e.table = JointTable(2, 4);
  for (double& v : e.table.data()) v = rng.uniform();
  BehaviorDistribution mu{"random", JointTable(2, 4)};
  for (int x = 0; x < 2; ++x) rng.dirichlet(mu.table.row(x));
  double oracle = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int j = 0; j < 4; ++j) {
      const double z = e.table(x, j) - g.reward(0)(x, j);
      oracle += g.context_dist()[x] * mu.table(x, j) * z * z;
    }
  }
  EXPECT_NEAR(in_sample_sq_error(e, g, mu), oracle, 1e-15);
}

TEST(FastRate, NoiselessPassesEveryTrial) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 15, 0.3, 2);
  const FastRateReport r = check_fast_rate_bound(50, 100, c, g, uniform_mu(g), 0.1, 0.0, 3);
  EXPECT_EQ(r.fraction, 1.0);
  EXPECT_EQ(r.worst_error, 0.0);
}

TEST(FastRate, NoisyModeMeetsConfidence) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 15, 0.3, 2);
  const FastRateReport a = check_fast_rate_bound(200, 500, c, g, uniform_mu(g), 0.1, 0.25, 7);
  EXPECT_GE(a.fraction, 0.9);
  EXPECT_NEAR(a.threshold, 30.0 * std::log(2.0 * 16 / 0.1) / 500, 1e-15);
  const FastRateReport b = check_fast_rate_bound(200, 1000, c, g, uniform_mu(g), 0.1, 0.25, 7);
  EXPECT_GE(b.fraction, 0.9);
  EXPECT_NEAR(b.threshold, a.threshold / 2, 1e-15);
}

TEST(EmpiricalGame, KeepsPotentialAndRemeasuresAlpha) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 3, 0.3, 2);
  std::vector<QEstimate> est(2);
  for (int i = 0; i < 2; ++i) {
    est[i].player = i;
    est[i].table = c.candidates[i][1];
  }
  const Game model = empirical_game(g, est);
  ASSERT_TRUE(model.potential().has_value());
  EXPECT_EQ(*model.potential(), *g.potential());
  EXPECT_NEAR(*model.declared_alpha(), estimate_alpha(model, *g.potential()), 1e-15);
  EXPECT_GT(*model.declared_alpha(), 0.0);
}

TEST(EstimationJson, RoundTrip) {
  const Game g = fixture();
  const FunctionClass c = build_tabular_class(g, 4, 0.3, 6);
  const FunctionClass back = function_class_from_json(function_class_to_json(c, g), g);
  EXPECT_EQ(back.candidates, c.candidates);
  EXPECT_EQ(back.hash(0), c.hash(0));
  const Dataset d = sample_dataset(g, uniform_mu(g), 40, 2, 0.25);
  const auto est = least_squares_fit_all(d, c);
  const auto est2 = estimates_from_json(estimates_to_json(est, g), g);
  ASSERT_EQ(est2.size(), est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    EXPECT_EQ(est2[i].table, est[i].table);
    EXPECT_EQ(est2[i].chosen_index, est[i].chosen_index);
    EXPECT_EQ(est2[i].class_hash, est[i].class_hash);
  }
}

}  // namespace
}  // namespace potlab
