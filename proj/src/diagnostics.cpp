#include "potlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "potlab/error.hpp"
#include "potlab/estimation.hpp"
#include "potlab/game_core.hpp"
#include "potlab/rng.hpp"
#include "potlab/stats.hpp"

namespace potlab {

void CheckReport::observe(double violation,
                          const std::function<Json()>& witness_fn) {
  ++instances;
  if (std::isnan(violation)) violation = std::numeric_limits<double>::infinity();
  if (violation > worst_violation) {
    worst_violation = violation;
    witness = witness_fn();
  }
}

void CheckReport::finish() { pass = worst_violation <= tolerance; }

void CheckReport::merge(const CheckReport& other) {
  instances += other.instances;
  if (other.worst_violation > worst_violation) {
    worst_violation = other.worst_violation;
    witness = other.witness;
  }
  finish();
}

GameSpec team_fixture_spec() {
  GameSpec spec;
  spec.family = GameFamily::kTeam;
  spec.num_players = 2;
  spec.num_contexts = 2;
  spec.action_counts = {2, 2};
  spec.seed = 11;
  spec.reward_lo = 0.25;
  spec.reward_hi = 0.75;
  return spec;
}

GameSpec perturbed_team_fixture_spec(double scale) {
  GameSpec spec = team_fixture_spec();
  spec.family = GameFamily::kPerturbedTeam;
  spec.perturbation_scale = scale;
  // Narrower base range so that base +- 0.1 stays inside [0.25, 0.75].
  spec.reward_lo = 0.35;
  spec.reward_hi = 0.65;
  return spec;
}

namespace {

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

CheckReport make_report(std::string name, double tolerance) {
  CheckReport r;
  r.name = std::move(name);
  r.tolerance = tolerance;
  return r;
}

std::vector<double> random_positive_distribution(Rng& rng, int n) {
  std::vector<double> d(n);
  rng.dirichlet(d);
  for (double& v : d) v = 0.5 * v + 0.5 / n;
  return d;
}

ProductPolicy random_positive_policy(Rng& rng, const Game& game) {
  std::vector<PlayerTable> tables;
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerTable t(game.num_contexts(), game.space().count(i));
    for (int x = 0; x < game.num_contexts(); ++x) {
      const auto d = random_positive_distribution(rng, t.cols());
      std::copy(d.begin(), d.end(), t.row(x).begin());
    }
    tables.push_back(std::move(t));
  }
  return ProductPolicy(std::move(tables));
}

ProductPolicy random_dirichlet_policy(Rng& rng, const Game& game) {
  std::vector<PlayerTable> tables;
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerTable t(game.num_contexts(), game.space().count(i));
    for (int x = 0; x < game.num_contexts(); ++x) rng.dirichlet(t.row(x));
    tables.push_back(std::move(t));
  }
  return ProductPolicy(std::move(tables));
}

// pi_j proportional to ref_j exp(eta g_j) with g_j in [0, 1]: the form every
// OPMD iterate has.
ProductPolicy random_gibbs_policy(Rng& rng, const ProductPolicy& ref,
                                  double eta) {
  std::vector<PlayerTable> tables;
  for (int i = 0; i < ref.num_players(); ++i) {
    PlayerTable g(ref.num_contexts(), ref.player(i).cols());
    for (double& v : g.data()) v = rng.uniform();
    tables.push_back(regularized_best_response(g, ref.player(i), eta));
  }
  return ProductPolicy(std::move(tables));
}

}  // namespace

std::vector<DistributionPair> random_distribution_pairs(int count,
                                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DistributionPair> out;
  for (int k = 0; k < count; ++k) {
    const int n = 2 + static_cast<int>(rng.below(5));
    std::vector<double> p(n), q(n);
    rng.dirichlet(p);
    rng.dirichlet(q);
    out.emplace_back(std::move(p), std::move(q));
  }
  return out;
}

std::vector<DistributionPair> random_logit_pairs(int count, std::uint64_t seed,
                                                 double radius) {
  Rng rng(seed);
  std::vector<DistributionPair> out;
  for (int k = 0; k < count; ++k) {
    const int n = 2 + static_cast<int>(rng.below(5));
    std::vector<double> a(n), b(n);
    for (int j = 0; j < n; ++j) {
      a[j] = rng.uniform(-radius, radius);
      b[j] = a[j] + rng.uniform(-radius, radius);
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

CheckReport check_pinsker(const std::vector<DistributionPair>& pairs) {
  CheckReport r = make_report("pinsker", 1e-12);
  for (const auto& [p, q] : pairs) {
    const double kl = kl_divergence(p, q);
    const double d = l1(p, q);
    r.observe(0.5 * d * d - kl, [&] {
      return Json{{"p", p}, {"q", q}, {"kl", kl}, {"half_l1_sq", 0.5 * d * d}};
    });
  }
  r.finish();
  return r;
}

CheckReport check_bregman_smoothness(
    const std::vector<DistributionPair>& logit_pairs) {
  CheckReport r = make_report("bregman_smoothness", 1e-12);
  std::vector<double> soft;
  for (const auto& [theta, theta2] : logit_pairs) {
    const double lse = log_sum_exp(theta);
    const double lse2 = log_sum_exp(theta2);
    double inner = 0.0, inf = 0.0;
    for (std::size_t a = 0; a < theta.size(); ++a) {
      const double diff = theta2[a] - theta[a];
      inner += std::exp(theta[a] - lse) * diff;
      inf = std::max(inf, std::abs(diff));
    }
    const double bregman = lse2 - lse - inner;
    const double bound = 0.5 * inf * inf;
    r.observe(std::max(bregman - bound, -bregman), [&] {
      return Json{{"theta", theta}, {"theta_prime", theta2},
                  {"bregman", bregman}, {"bound", bound}};
    });
  }
  r.finish();
  return r;
}

std::vector<EvaluationFixture> random_evaluation_fixtures(
    int count, std::uint64_t seed, bool gibbs_policies) {
  std::vector<EvaluationFixture> out;
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, "evaluation_fixture", static_cast<std::uint64_t>(k)));
    GameSpec spec;
    spec.num_players = 1 + static_cast<int>(rng.below(3));
    spec.num_contexts = 1 + static_cast<int>(rng.below(3));
    spec.action_counts.clear();
    for (int i = 0; i < spec.num_players; ++i) {
      spec.action_counts.push_back(2 + static_cast<int>(rng.below(2)));
    }
    spec.family = rng.below(2) == 0 ? GameFamily::kRandomGeneralSum
                                    : GameFamily::kPerturbedTeam;
    spec.perturbation_scale = 0.2;
    spec.seed = rng.next();
    Game truth = make_game(spec);
    std::vector<JointTable> q_hat;
    for (int i = 0; i < truth.num_players(); ++i) {
      JointTable q = truth.reward(i);
      for (double& v : q.data()) {
        v = std::clamp(v + rng.uniform(-0.3, 0.3), 0.0, 1.0);
      }
      q_hat.push_back(std::move(q));
    }
    const double eta = rng.uniform(0.2, 3.0);
    ProductPolicy ref = random_positive_policy(rng, truth);
    ProductPolicy pi = gibbs_policies ? random_gibbs_policy(rng, ref, eta)
                                      : random_dirichlet_policy(rng, truth);
    out.push_back({std::move(truth), std::move(q_hat), std::move(pi),
                   std::move(ref), eta});
  }
  return out;
}

CheckReport check_value_gap_bound(const std::vector<EvaluationFixture>& fx) {
  CheckReport r = make_report("value_gap_bound", 1e-10);
  for (std::size_t f = 0; f < fx.size(); ++f) {
    const auto& e = fx[f];
    for (int i = 0; i < e.truth.num_players(); ++i) {
      const PlayerTable q = marginal_q(e.truth.reward(i), e.truth.space(), e.pi, i);
      const PlayerTable qh = marginal_q(e.q_hat[i], e.truth.space(), e.pi, i);
      const auto vd = best_response_value(q, e.ref.player(i), e.eta);
      const auto vdh = best_response_value(qh, e.ref.player(i), e.eta);
      const PlayerTable brh = regularized_best_response(qh, e.ref.player(i), e.eta);
      for (int x = 0; x < e.truth.num_contexts(); ++x) {
        std::vector<double> diff(q.cols());
        for (int a = 0; a < q.cols(); ++a) diff[a] = q(x, a) - qh(x, a);
        const double inf = sup_norm(diff);
        const double lhs = vd[x] - vdh[x];
        const double rhs = dot(brh.row(x), diff) + 0.5 * e.eta * inf * inf;
        r.observe(lhs - rhs, [&] {
          return Json{{"fixture", f}, {"player", i}, {"context", x},
                      {"lhs", lhs}, {"rhs", rhs}};
        });
      }
    }
  }
  r.finish();
  return r;
}

CheckReport check_l1_proportionality(const OpmdTrajectory& traj,
                                     const SolverConfig& cfg) {
  CheckReport r = make_report("l1_proportionality", 1e-10);
  const double factor = 4.0 * (cfg.eta + cfg.gamma) / cfg.gamma;
  for (const auto& rec : traj.retained) {
    for (int i = 0; i < rec.policy.num_players(); ++i) {
      for (int x = 0; x < rec.policy.num_contexts(); ++x) {
        const auto p = rec.policy.at(i, x);
        const auto b = rec.best_response.at(i, x);
        const auto n = rec.next.at(i, x);
        double nu = 1.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
          nu = std::min({nu, p[a], b[a], n[a]});
        }
        const double lhs = l1(p, b);
        const double rhs = factor / nu * l1(p, n);
        r.observe(lhs - rhs, [&] {
          return Json{{"t", rec.t}, {"player", i}, {"context", x},
                      {"lhs", lhs}, {"rhs", rhs}, {"nu_floor", nu}};
        });
      }
    }
  }
  r.finish();
  return r;
}

CheckReport check_potential_ascent(const OpmdTrajectory& traj, double alpha,
                                   const SolverConfig& cfg, int num_players) {
  if (!traj.has_potential) {
    throw Error("potential ascent check needs a potential table");
  }
  CheckReport r = make_report("potential_ascent", 1e-9);
  const double L = cfg.smoothness(num_players);
  std::int64_t below_alpha_free = 0;
  double worst_alpha_free = -std::numeric_limits<double>::infinity();
  for (const auto& s : traj.series) {
    const double change = s.phi_reg_next - s.phi_reg;
    const double quad = 0.5 * L * s.step_l1_sq;
    const double bound = quad - alpha * s.step_l1;
    r.observe(bound - change, [&] {
      return Json{{"t", s.t}, {"change", change}, {"bound", bound},
                  {"step_l1", s.step_l1}, {"step_l1_sq", s.step_l1_sq}};
    });
    // Steps that fall short of the alpha-free bound use the allowance.
    if (change < quad - 1e-9) ++below_alpha_free;
    worst_alpha_free = std::max(worst_alpha_free, quad - change);
  }
  r.finish();
  r.details = {{"alpha", alpha},
               {"smoothness_constant", L},
               {"steps_checked", traj.series.size()},
               {"steps_using_alpha_allowance", below_alpha_free},
               {"worst_alpha_free_shortfall", worst_alpha_free}};
  return r;
}

CheckReport check_potential_ascent(const OpmdTrajectory& traj,
                                   const Game& model_with_potential,
                                   const SolverConfig& cfg) {
  const auto alpha = model_with_potential.declared_alpha();
  if (!alpha) throw Error("potential ascent check needs declared_alpha");
  return check_potential_ascent(traj, *alpha, cfg,
                                model_with_potential.num_players());
}

CheckReport check_potential_monotone(const OpmdTrajectory& traj) {
  if (!traj.has_potential) {
    throw Error("monotonicity check needs a potential table");
  }
  CheckReport r = make_report("potential_monotone", 1e-9);
  for (const auto& s : traj.series) {
    r.observe(s.phi_reg - s.phi_reg_next, [&] {
      return Json{{"t", s.t}, {"phi_reg", s.phi_reg},
                  {"phi_reg_next", s.phi_reg_next}};
    });
  }
  r.finish();
  return r;
}

CheckReport check_eps_pot_identity(const OpmdTrajectory& traj,
                                   const ProductPolicy& ref, double eta) {
  CheckReport r = make_report("eps_pot_identity", 1e-10);
  for (const auto& rec : traj.retained) {
    for (int i = 0; i < rec.policy.num_players(); ++i) {
      const auto vd = best_response_value(rec.q_bar[i], ref.player(i), eta);
      for (int x = 0; x < rec.policy.num_contexts(); ++x) {
        const auto p = rec.policy.at(i, x);
        const double v = dot(p, rec.q_bar[i].row(x)) -
                         kl_divergence(p, ref.at(i, x)) / eta;
        const double lhs = vd[x] - v;
        const double rhs = kl_divergence(p, rec.best_response.at(i, x)) / eta;
        r.observe(std::abs(lhs - rhs), [&] {
          return Json{{"t", rec.t}, {"player", i}, {"context", x},
                      {"value_gap", lhs}, {"kl_over_eta", rhs}};
        });
      }
    }
  }
  r.finish();
  return r;
}

CheckReport check_eps_pot_identity(const Game& model,
                                   const std::vector<ProductPolicy>& policies,
                                   const ProductPolicy& ref, double eta) {
  CheckReport r = make_report("eps_pot_identity", 1e-10);
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const auto& pi = policies[k];
    for (int i = 0; i < model.num_players(); ++i) {
      const PlayerTable q = marginal_q(model.reward(i), model.space(), pi, i);
      const auto vd = best_response_value(q, ref.player(i), eta);
      const PlayerTable br = regularized_best_response(q, ref.player(i), eta);
      for (int x = 0; x < model.num_contexts(); ++x) {
        const auto p = pi.at(i, x);
        const double v = dot(p, q.row(x)) - kl_divergence(p, ref.at(i, x)) / eta;
        const double lhs = vd[x] - v;
        const double rhs = kl_divergence(p, br.row(x)) / eta;
        r.observe(std::abs(lhs - rhs), [&] {
          return Json{{"policy", k}, {"player", i}, {"context", x},
                      {"value_gap", lhs}, {"kl_over_eta", rhs}};
        });
      }
    }
  }
  r.finish();
  return r;
}

CheckReport check_bias_cancellation(const RopeSolution& rope,
                                    const std::vector<JointTable>& q_hat,
                                    const Game& truth,
                                    const ProductPolicy& ref, double eta) {
  CheckReport r = make_report("bias_cancellation", 1e-12);
  const auto rho = truth.context_dist();
  double max_abs = 0.0;
  for (int i = 0; i < truth.num_players(); ++i) {
    JointTable z = q_hat[i];
    for (std::size_t k = 0; k < z.data().size(); ++k) {
      z.data()[k] -= truth.reward(i).data()[k];
    }
    const double z_inf = sup_norm(z.data());
    const PlayerTable qh = marginal_q(q_hat[i], truth.space(), rope.policy, i);
    const PlayerTable br = regularized_best_response(qh, ref.player(i), eta);
    const PlayerTable z_bar = marginal_q(z, truth.space(), rope.policy, i);
    double mismatch = 0.0;
    for (int x = 0; x < truth.num_contexts(); ++x) {
      const auto p = rope.policy.at(i, x);
      double inner = 0.0;
      for (int a = 0; a < z_bar.cols(); ++a) {
        inner += (p[a] - br(x, a)) * z_bar(x, a);
      }
      mismatch += rho[x] * inner;
    }
    max_abs = std::max(max_abs, std::abs(mismatch));
    const double bound = rope.max_residual * z_inf;
    r.observe(std::abs(mismatch) - bound, [&] {
      return Json{{"player", i}, {"mismatch", mismatch}, {"bound", bound},
                  {"residual", rope.max_residual}, {"z_inf", z_inf}};
    });
  }
  r.finish();
  r.details = {{"max_abs_mismatch", max_abs},
               {"residual", rope.max_residual}};
  return r;
}

CheckReport check_alpha_gradient(const Game& game, int num_base_profiles,
                                 std::uint64_t seed) {
  if (!game.potential()) throw Error("alpha gradient check needs a potential");
  CheckReport r = make_report("alpha_gradient", 1e-10);
  const double alpha = *game.declared_alpha();
  const JointTable& phi = *game.potential();
  const auto rho = game.context_dist();
  Rng rng(seed);
  double worst = 0.0;
  for (int b = 0; b < num_base_profiles; ++b) {
    const ProductPolicy base = random_dirichlet_policy(rng, game);
    for (int i = 0; i < game.num_players(); ++i) {
      // d J_i / d pi_i(a|x) = rho(x) Qbar_i(x, a); likewise for Phi.
      const PlayerTable gj = marginal_q(game.reward(i), game.space(), base, i);
      const PlayerTable gp = marginal_q(phi, game.space(), base, i);
      // The sup over pure per-context pairs decouples over contexts and is
      // symmetric in (pi, pi'), so it is sum_x rho(x) * range_a(gj - gp).
      double sup = 0.0;
      for (int x = 0; x < game.num_contexts(); ++x) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int a = 0; a < gj.cols(); ++a) {
          const double g = gj(x, a) - gp(x, a);
          lo = std::min(lo, g);
          hi = std::max(hi, g);
        }
        sup += rho[x] * (hi - lo);
      }
      worst = std::max(worst, sup);
      r.observe(sup - alpha, [&] {
        return Json{{"base_profile", b}, {"player", i}, {"inner_product", sup},
                    {"alpha", alpha}};
      });
    }
  }
  r.finish();
  r.details = {{"declared_alpha", alpha}, {"worst_inner_product", worst}};
  return r;
}

CheckReport check_concentrability_chain(const Game& game,
                                        const BehaviorDistribution& mu,
                                        const ProductPolicy& ref,
                                        const std::vector<JointTable>& q_hat,
                                        const ProductPolicy& pi, double eta) {
  const CoverageResult cov = coverage_coefficient(game, mu, ref);
  if (!cov.covered) {
    throw Error("concentrability chain needs finite coverage");
  }
  const double c_shift = shift_coefficient(eta, game.num_players());
  CheckReport r = make_report("concentrability_chain", 1e-12);
  const auto rho = game.context_dist();
  for (int i = 0; i < game.num_players(); ++i) {
    QEstimate est;
    est.player = i;
    est.table = q_hat[i];
    const double mse = in_sample_sq_error(est, game, mu);
    const PlayerTable q = marginal_q(game.reward(i), game.space(), pi, i);
    const PlayerTable qh = marginal_q(q_hat[i], game.space(), pi, i);
    double lhs = 0.0;
    for (int x = 0; x < game.num_contexts(); ++x) {
      double inf = 0.0;
      for (int a = 0; a < q.cols(); ++a) {
        inf = std::max(inf, std::abs(q(x, a) - qh(x, a)));
      }
      lhs += rho[x] * inf * inf;
    }
    lhs *= 0.5 * eta;
    const double rhs = 0.5 * eta * c_shift * cov.c_uni * mse;
    r.observe(lhs - rhs, [&] {
      return Json{{"player", i}, {"lhs", lhs}, {"rhs", rhs},
                  {"C_uni", cov.c_uni}, {"C_shift", c_shift}, {"mse", mse}};
    });
  }
  r.finish();
  return r;
}

CheckReport check_loglinear_identity(const OpmdTrajectory& traj,
                                     const SolverConfig& cfg) {
  CheckReport r = make_report("loglinear_identity", 1e-12);
  const double beta = cfg.gamma / (cfg.eta + cfg.gamma);
  std::vector<double> z;
  for (const auto& rec : traj.retained) {
    for (int i = 0; i < rec.policy.num_players(); ++i) {
      for (int x = 0; x < rec.policy.num_contexts(); ++x) {
        const auto p = rec.policy.at(i, x);
        const auto b = rec.best_response.at(i, x);
        const auto n = rec.next.at(i, x);
        z.resize(p.size());
        for (std::size_t a = 0; a < p.size(); ++a) {
          z[a] = (1.0 - beta) * std::log(p[a]) + beta * std::log(b[a]);
        }
        const double lse = log_sum_exp(z);
        double dev = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
          dev += std::abs(n[a] - std::exp(z[a] - lse));
        }
        r.observe(dev, [&] {
          return Json{{"t", rec.t}, {"player", i}, {"context", x},
                      {"deviation", dev}};
        });
      }
    }
  }
  // Steps that were not retained are covered by the in-run maximum.
  r.observe(traj.stats.max_loglinear_dev, [&] {
    return Json{{"source", "running maximum over all steps"},
                {"deviation", traj.stats.max_loglinear_dev}};
  });
  r.finish();
  r.details = {{"steps", traj.stats.steps},
               {"retained", traj.retained.size()},
               {"running_max", traj.stats.max_loglinear_dev}};
  return r;
}

CheckReport check_gibbs_closure(const OpmdTrajectory& traj, double eta) {
  CheckReport r = make_report("gibbs_ratio", kGibbsRatioTol);
  const double bound = std::exp(eta);
  r.observe(traj.stats.max_gibbs_ratio - bound, [&] {
    return Json{{"max_ratio", traj.stats.max_gibbs_ratio}, {"bound", bound}};
  });
  r.finish();
  r.details = {{"min_entry", traj.stats.min_entry}};
  return r;
}

double certified_eps_fp(const Game& model, const ProductPolicy& pi,
                        const ProductPolicy& ref, double eta) {
  const auto rho = model.context_dist();
  double total = 0.0;
  for (int i = 0; i < model.num_players(); ++i) {
    const PlayerTable q = marginal_q(model.reward(i), model.space(), pi, i);
    const PlayerTable br = regularized_best_response(q, ref.player(i), eta);
    for (int x = 0; x < model.num_contexts(); ++x) {
      const double r = l1(pi.at(i, x), br.row(x));
      const double nu = *std::min_element(br.row(x).begin(), br.row(x).end());
      total += rho[x] * r * r / (nu * eta);
    }
  }
  return total;
}

CheckReport check_gap_decomposition(const std::vector<EvaluationFixture>& fx) {
  CheckReport r = make_report("gap_decomposition", 1e-10);
  for (std::size_t f = 0; f < fx.size(); ++f) {
    const auto& e = fx[f];
    const auto d = gap_decomposition(e.truth, e.q_hat, e.pi, e.ref, e.eta);
    const auto g = nash_gap_report(e.truth, e.pi, e.ref, e.eta);
    double parts = 0.0;
    for (std::size_t i = 0; i < d.eps_pot.size(); ++i) {
      parts += d.eps_pot[i] + d.delta_br[i] + d.delta_iter[i];
    }
    r.observe(std::abs(parts - g.gap), [&] {
      return Json{{"fixture", f}, {"parts", parts}, {"nash_gap", g.gap}};
    });
  }
  r.finish();
  return r;
}

TrendResult br_distance_trend(const Game& model, const ProductPolicy& ref,
                             const SolverConfig& cfg,
                             const std::vector<std::int64_t>& horizons) {
  TrendResult out;
  out.horizons = horizons;
  std::vector<double> lx, ly;
  for (auto T : horizons) {
    SolverConfig c = cfg;
    c.max_iters = T;
    OpmdOptions opts;
    opts.retain_limit = 1;  // only scalar statistics are needed
    const OpmdTrajectory traj = run_opmd(model, ref, c, opts);
    const double avg = traj.stats.sum_br_l1 / static_cast<double>(T);
    out.averages.push_back(avg);
    lx.push_back(std::log(static_cast<double>(T)));
    ly.push_back(std::log(avg));
  }
  out.slope = ols(lx, ly).slope;
  return out;
}

CheckReport check_br_distance_trend(const TrendResult& trend,
                                   double max_slope) {
  CheckReport r = make_report("br_distance_trend", 0.0);
  r.observe(trend.slope - max_slope, [&] {
    return Json{{"horizons", trend.horizons}, {"averages", trend.averages},
                {"slope", trend.slope}, {"max_slope", max_slope}};
  });
  r.finish();
  return r;
}

CheckReport fast_rate_report(const FastRateReport& f, double delta, int n) {
  CheckReport r = make_report("fast_rate", 0.0);
  r.instances = f.trials;
  r.worst_violation = (1.0 - delta) - f.fraction;
  r.witness = {{"n", n}, {"delta", delta}, {"fraction", f.fraction},
               {"threshold", f.threshold}, {"worst_error", f.worst_error}};
  r.finish();
  return r;
}

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {
      "pinsker",         "bregman_smoothness", "value_gap_bound",
      "l1_proportionality", "potential_ascent", "potential_monotone",
      "eps_pot_identity", "bias_cancellation", "alpha_gradient",
      "concentrability_chain", "loglinear_identity", "gibbs_ratio",
      "gap_decomposition", "fast_rate", "br_distance_trend"};
  return names;
}

namespace {

SolverConfig fixture_solver(int num_players, std::int64_t T,
                            std::uint64_t seed) {
  SolverConfig cfg;
  cfg.eta = 1.0;
  cfg.gamma = 1.0 / (2.0 * num_players);
  cfg.max_iters = T;
  cfg.certify_step = true;
  cfg.seed = seed;
  return cfg;
}

struct TrajectoryFixture {
  Game game;
  ProductPolicy ref;
  SolverConfig cfg;
  OpmdTrajectory traj;
};

TrajectoryFixture trajectory_fixture(const GameSpec& spec, std::uint64_t seed) {
  Game game = make_game(spec);
  ProductPolicy ref = ProductPolicy::uniform(game);
  SolverConfig cfg = fixture_solver(game.num_players(), 10'000, seed);
  OpmdOptions opts;
  opts.full_series = true;
  OpmdTrajectory traj = run_opmd(game, ref, cfg, opts);
  return {std::move(game), std::move(ref), cfg, std::move(traj)};
}

CheckReport bias_cancellation_sweep(int count, std::uint64_t seed) {
  CheckReport all = make_report("bias_cancellation", 1e-12);
  double max_abs = 0.0;
  int unconverged = 0;
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, "bias_fixture", static_cast<std::uint64_t>(k)));
    GameSpec spec;
    spec.num_players = 2 + static_cast<int>(rng.below(2));
    spec.num_contexts = 1 + static_cast<int>(rng.below(2));
    spec.action_counts.assign(spec.num_players, 0);
    for (int& c : spec.action_counts) c = 2 + static_cast<int>(rng.below(2));
    spec.family = rng.below(2) == 0 ? GameFamily::kTeam
                                    : GameFamily::kPerturbedTeam;
    spec.perturbation_scale = spec.family == GameFamily::kTeam ? 0.0 : 0.1;
    spec.seed = rng.next();
    const Game truth = make_game(spec);
    const FunctionClass cls =
        build_tabular_class(truth, 1, 0.2, rng.next());
    std::vector<JointTable> q_hat;
    for (int i = 0; i < truth.num_players(); ++i) {
      q_hat.push_back(cls.candidates[i].back());
    }
    const Game model = truth.with_rewards(q_hat);
    const ProductPolicy ref = ProductPolicy::uniform(truth);
    SolverConfig cfg = fixture_solver(truth.num_players(), 1, 0);
    const RopeSolution sol = solve_rope(model, ref, cfg);
    if (!sol.converged) ++unconverged;
    CheckReport one = check_bias_cancellation(sol, q_hat, truth, ref, cfg.eta);
    one.witness["fixture"] = k;
    max_abs = std::max(max_abs, one.details.value("max_abs_mismatch", 0.0));
    all.merge(one);
  }
  all.details = {{"fixtures", count},
                 {"max_abs_mismatch", max_abs},
                 {"unconverged", unconverged}};
  if (unconverged > 0) all.pass = false;
  return all;
}

CheckReport concentrability_sweep(int count, std::uint64_t seed) {
  CheckReport all = make_report("concentrability_chain", 1e-12);
  const auto fixtures = random_evaluation_fixtures(count, seed, true);
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    const auto& f = fixtures[k];
    Rng rng(derive_seed(seed, "behavior_mix", k));
    const BehaviorDistribution mu =
        uniform_mixture_behavior(f.truth, f.ref, rng.uniform(0.1, 1.0));
    worst_ratio = std::max(worst_ratio,
                           check_gibbs_ratio(f.pi, f.ref, f.eta).max_ratio /
                               std::exp(f.eta));
    CheckReport one =
        check_concentrability_chain(f.truth, mu, f.ref, f.q_hat, f.pi, f.eta);
    one.witness["fixture"] = k;
    all.merge(one);
  }
  all.details = {{"fixtures", count},
                 {"max_gibbs_ratio_over_bound", worst_ratio}};
  return all;
}

}  // namespace

std::vector<CheckReport> run_diagnostics_suite(
    const std::optional<std::string>& only, std::uint64_t seed) {
  const auto& names = diagnostic_names();
  if (only && std::find(names.begin(), names.end(), *only) == names.end()) {
    throw Error("unknown check '" + *only + "'");
  }
  auto wanted = [&](const char* name) { return !only || *only == name; };
  std::vector<CheckReport> out;

  if (wanted("pinsker")) {
    out.push_back(check_pinsker(random_distribution_pairs(
        1000, derive_seed(seed, "pinsker", 0))));
  }
  if (wanted("bregman_smoothness")) {
    out.push_back(check_bregman_smoothness(
        random_logit_pairs(1000, derive_seed(seed, "bregman", 0))));
  }
  if (wanted("value_gap_bound")) {
    out.push_back(check_value_gap_bound(
        random_evaluation_fixtures(100, derive_seed(seed, "value_gap", 0))));
  }
  if (wanted("gap_decomposition")) {
    out.push_back(check_gap_decomposition(
        random_evaluation_fixtures(100, derive_seed(seed, "gap_decomp", 0))));
  }

  const bool need_traj =
      wanted("l1_proportionality") || wanted("potential_ascent") ||
      wanted("potential_monotone") || wanted("eps_pot_identity") ||
      wanted("loglinear_identity") || wanted("gibbs_ratio");
  if (need_traj) {
    const auto team = trajectory_fixture(team_fixture_spec(),
                                         derive_seed(seed, "team_opmd", 0));
    const auto pert = trajectory_fixture(perturbed_team_fixture_spec(0.1),
                                         derive_seed(seed, "pert_opmd", 0));
    if (wanted("l1_proportionality")) {
      out.push_back(check_l1_proportionality(team.traj, team.cfg));
    }
    if (wanted("potential_ascent")) {
      CheckReport r = check_potential_ascent(team.traj, team.game, team.cfg);
      CheckReport p = check_potential_ascent(pert.traj, pert.game, pert.cfg);
      r.details = {{"team", r.details}, {"perturbed_team", p.details}};
      r.merge(p);
      out.push_back(r);
    }
    if (wanted("potential_monotone")) {
      out.push_back(check_potential_monotone(team.traj));
    }
    if (wanted("eps_pot_identity")) {
      CheckReport r = check_eps_pot_identity(team.traj, team.ref, team.cfg.eta);
      r.merge(check_eps_pot_identity(pert.traj, pert.ref, pert.cfg.eta));
      out.push_back(r);
    }
    if (wanted("loglinear_identity")) {
      CheckReport r = check_loglinear_identity(team.traj, team.cfg);
      r.merge(check_loglinear_identity(pert.traj, pert.cfg));
      out.push_back(r);
    }
    if (wanted("gibbs_ratio")) {
      CheckReport r = check_gibbs_closure(team.traj, team.cfg.eta);
      r.merge(check_gibbs_closure(pert.traj, pert.cfg.eta));
      out.push_back(r);
    }
  }
  if (wanted("bias_cancellation")) {
    out.push_back(bias_cancellation_sweep(50, derive_seed(seed, "bias", 0)));
  }
  if (wanted("alpha_gradient")) {
    CheckReport r = check_alpha_gradient(make_game(team_fixture_spec()), 100,
                                         derive_seed(seed, "alpha_grad", 0));
    r.merge(check_alpha_gradient(make_game(perturbed_team_fixture_spec(0.1)),
                                 100, derive_seed(seed, "alpha_grad", 1)));
    GameSpec general = team_fixture_spec();
    general.family = GameFamily::kRandomGeneralSum;
    r.merge(check_alpha_gradient(make_game(general), 100,
                                 derive_seed(seed, "alpha_grad", 2)));
    out.push_back(r);
  }
  if (wanted("concentrability_chain")) {
    out.push_back(concentrability_sweep(100, derive_seed(seed, "conc", 0)));
  }
  if (wanted("fast_rate")) {
    const Game game = make_game(team_fixture_spec());
    const ProductPolicy ref = ProductPolicy::uniform(game);
    const auto mu = uniform_mixture_behavior(game, ref, 1.0);
    const auto cls = build_tabular_class(game, 15, 0.3,
                                         derive_seed(seed, "fast_rate_class", 0));
    const auto f = check_fast_rate_bound(200, 500, cls, game, mu, 0.1, 0.25,
                                         derive_seed(seed, "fast_rate", 0));
    out.push_back(fast_rate_report(f, 0.1, 500));
  }
  if (wanted("br_distance_trend")) {
    const Game game = make_game(team_fixture_spec());
    const ProductPolicy ref = ProductPolicy::uniform(game);
    const auto trend = br_distance_trend(
        game, ref, fixture_solver(2, 1, derive_seed(seed, "trend", 0)),
        {100, 1000, 10000});
    out.push_back(check_br_distance_trend(trend));
  }
  return out;
}

Json report_to_json(const CheckReport& r) {
  Json j;
  j["name"] = r.name;
  j["tolerance"] = r.tolerance;
  j["instances"] = r.instances;
  j["worst_violation"] = r.worst_violation;
  j["pass"] = r.pass;
  j["witness"] = r.witness;
  j["details"] = r.details;
  return j;
}

std::string reports_summary_csv(const std::vector<CheckReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "name,instances,worst_violation,tolerance,pass\n";
  for (const auto& r : reports) {
    out << r.name << ',' << r.instances << ',' << r.worst_violation << ','
        << r.tolerance << ',' << (r.pass ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace potlab
