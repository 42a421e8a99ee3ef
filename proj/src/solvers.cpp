#include "potlab/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "potlab/error.hpp"
#include "potlab/game_core.hpp"
#include "potlab/rng.hpp"

namespace potlab {

void SolverConfig::validate(int num_players) const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error("eta must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error("gamma must be > 0");
  }
  if (max_iters < 1) throw Error("max_iters (T) must be >= 1");
  if (!(fixed_point_tol > 0.0)) throw Error("fixed_point_tol must be > 0");
  if (smoothness_constant && !(*smoothness_constant > 0.0)) {
    throw Error("smoothness_constant must be > 0");
  }
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw Error("damping must lie in (0, 1]");
  }
  if (rope_max_iters < 1) throw Error("rope_max_iters must be >= 1");
  if (certify_step && gamma > 1.0 / (2.0 * smoothness(num_players))) {
    throw Error("certified mode requires gamma <= 1 / (2 L_Phi)");
  }
}

namespace {

double phi_reg_tables(const JointTable& phi, const Game& model,
                      std::span<const PlayerTable> players,
                      const ProductPolicy& ref, double eta) {
  const auto rho = model.context_dist();
  double value = expected_value(phi, model.space(), players, rho);
  for (int i = 0; i < model.num_players(); ++i) {
    for (int x = 0; x < model.num_contexts(); ++x) {
      value -= rho[x] * kl_divergence(players[i].row(x), ref.at(i, x)) / eta;
    }
  }
  return value;
}

void check_inputs(const Game& model, const ProductPolicy& ref) {
  ref.check_shape(model);
  for (const auto& t : ref.players()) {
    for (double v : t.data()) {
      if (!(v > 0.0)) throw Error("reference policy must be strictly positive");
    }
  }
}

// Scratch buffers and the update shared by opmd_step and run_opmd.
class OpmdKernel {
 public:
  OpmdKernel(const Game& model, const ProductPolicy& ref,
             const SolverConfig& cfg)
      : model_(model), eta_(cfg.eta) {
    beta_ = cfg.gamma / (cfg.eta + cfg.gamma);
    for (int i = 0; i < model.num_players(); ++i) {
      const int a = model.space().count(i);
      const int x = model.num_contexts();
      PlayerTable lr(x, a);
      for (std::size_t k = 0; k < lr.data().size(); ++k) {
        lr.data()[k] = std::log(ref.player(i).data()[k]);
      }
      log_ref_.push_back(std::move(lr));
      q_bar_.emplace_back(x, a);
      br_.emplace_back(x, a);
      log_br_.emplace_back(x, a);
      next_.emplace_back(x, a);
      log_next_.emplace_back(x, a);
      width_ = std::max(width_, a);
    }
    z_.resize(width_);
  }

  // Advances from (cur, log_cur) into next_/log_next_ and fills the step
  // scalars other than the potential values.
  void step(const std::vector<PlayerTable>& cur,
            const std::vector<PlayerTable>& log_cur, StepScalars& s) {
    const auto rho = model_.context_dist();
    const int m = model_.num_players();
    for (int i = 0; i < m; ++i) {
      marginal_q_into(model_.reward(i), model_.space(), cur, i, q_bar_[i]);
    }
    s.step_l1 = s.step_l1_sq = s.br_l1 = 0.0;
    s.max_gibbs_ratio = s.loglinear_dev = 0.0;
    for (int i = 0; i < m; ++i) {
      const int na = model_.space().count(i);
      const std::span<double> z(z_.data(), na);
      double worst_step = 0.0;
      for (int x = 0; x < model_.num_contexts(); ++x) {
        const auto q = q_bar_[i].row(x);
        const auto lr = log_ref_[i].row(x);
        const auto lc = log_cur[i].row(x);
        const auto pc = cur[i].row(x);
        auto lb = log_br_[i].row(x);
        auto pb = br_[i].row(x);
        auto ln = log_next_[i].row(x);
        auto pn = next_[i].row(x);

        for (int a = 0; a < na; ++a) z[a] = lr[a] + eta_ * q[a];
        double lse = log_sum_exp(z);
        for (int a = 0; a < na; ++a) {
          lb[a] = z[a] - lse;
          pb[a] = std::exp(lb[a]);
        }
        for (int a = 0; a < na; ++a) {
          z[a] = beta_ * lr[a] + (1.0 - beta_) * lc[a] + eta_ * beta_ * q[a];
        }
        lse = log_sum_exp(z);
        for (int a = 0; a < na; ++a) {
          ln[a] = z[a] - lse;
          pn[a] = std::exp(ln[a]);
          if (!(pn[a] > 0.0)) {
            throw InternalError("OPMD iterate lost positivity");
          }
        }
        // Geometric mixture of the iterate and its best response.
        for (int a = 0; a < na; ++a) {
          z[a] = (1.0 - beta_) * lc[a] + beta_ * lb[a];
        }
        lse = log_sum_exp(z);
        double dev = 0.0, step = 0.0, gap = 0.0;
        for (int a = 0; a < na; ++a) {
          dev += std::abs(pn[a] - std::exp(z[a] - lse));
          step += std::abs(pn[a] - pc[a]);
          gap += std::abs(pc[a] - pb[a]);
          s.max_gibbs_ratio =
              std::max(s.max_gibbs_ratio, std::exp(ln[a] - lr[a]));
        }
        s.loglinear_dev = std::max(s.loglinear_dev, dev);
        worst_step = std::max(worst_step, step);
        s.step_l1_sq += rho[x] * step * step;
        s.br_l1 += rho[x] * gap;
      }
      s.step_l1 += worst_step;
    }
  }

  double max_residual_from_last_step(const std::vector<PlayerTable>& cur) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      for (int x = 0; x < cur[i].rows(); ++x) {
        double d = 0.0;
        for (int a = 0; a < cur[i].cols(); ++a) {
          d += std::abs(cur[i](x, a) - br_[i](x, a));
        }
        worst = std::max(worst, d);
      }
    }
    return worst;
  }

  std::vector<PlayerTable>& next() { return next_; }
  std::vector<PlayerTable>& log_next() { return log_next_; }
  const std::vector<PlayerTable>& q_bar() const { return q_bar_; }
  const std::vector<PlayerTable>& best_response() const { return br_; }
  const std::vector<PlayerTable>& log_ref() const { return log_ref_; }

 private:
  const Game& model_;
  double eta_;
  double beta_ = 0.0;
  int width_ = 0;
  std::vector<PlayerTable> log_ref_, q_bar_, br_, log_br_, next_, log_next_;
  std::vector<double> z_;
};

std::vector<PlayerTable> log_tables(const std::vector<PlayerTable>& p) {
  std::vector<PlayerTable> out = p;
  for (auto& t : out) {
    for (double& v : t.data()) {
      if (!(v > 0.0)) {
        throw InternalError("OPMD iterate has a non-positive entry");
      }
      v = std::log(v);
    }
  }
  return out;
}

}  // namespace

ProductPolicy opmd_step(const Game& model, const ProductPolicy& pi_t,
                        const ProductPolicy& ref, const SolverConfig& cfg) {
  cfg.validate(model.num_players());
  check_inputs(model, ref);
  pi_t.check_shape(model);
  OpmdKernel kernel(model, ref, cfg);
  const std::vector<PlayerTable> cur = pi_t.players();
  const std::vector<PlayerTable> log_cur = log_tables(cur);
  StepScalars s;
  kernel.step(cur, log_cur, s);
  return ProductPolicy(kernel.next());
}

std::int64_t draw_output_index(const SolverConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "opmd_output_index", 0));
  return 1 + rng.below(cfg.max_iters);
}

const IterateRecord* OpmdTrajectory::find(std::int64_t t) const {
  auto it = std::lower_bound(
      retained.begin(), retained.end(), t,
      [](const IterateRecord& r, std::int64_t v) { return r.t < v; });
  if (it == retained.end() || it->t != t) return nullptr;
  return &*it;
}

OpmdTrajectory run_opmd(const Game& model, const ProductPolicy& ref,
                        const SolverConfig& cfg, const OpmdOptions& options) {
  cfg.validate(model.num_players());
  check_inputs(model, ref);
  if (options.retain_limit < 1) throw Error("retain_limit must be >= 1");
  const std::int64_t T = cfg.max_iters;
  for (auto t : options.pinned) {
    if (t < 1 || t > T) throw Error("pinned iterate index outside [1, T]");
  }

  OpmdTrajectory traj;
  traj.T = T;
  traj.thinning = T <= options.retain_limit
                      ? 1
                      : (T + options.retain_limit - 1) / options.retain_limit;
  traj.output_index = options.last_iterate ? T + 1 : draw_output_index(cfg);
  traj.has_potential = model.potential().has_value();
  std::set<std::int64_t> pinned(options.pinned.begin(), options.pinned.end());
  if (!options.last_iterate) pinned.insert(traj.output_index);

  OpmdKernel kernel(model, ref, cfg);
  std::vector<PlayerTable> cur = ref.players();
  std::vector<PlayerTable> log_cur = kernel.log_ref();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double phi_cur = traj.has_potential
                       ? phi_reg_tables(*model.potential(), model, cur, ref,
                                        cfg.eta)
                       : nan;
  RunningStats& stats = traj.stats;
  for (const auto& t : cur) {
    for (double v : t.data()) stats.min_entry = std::min(stats.min_entry, v);
  }

  StepScalars s;
  for (std::int64_t t = 1; t <= T; ++t) {
    kernel.step(cur, log_cur, s);
    s.t = t;
    s.phi_reg = phi_cur;
    s.phi_reg_next = traj.has_potential
                         ? phi_reg_tables(*model.potential(), model,
                                          kernel.next(), ref, cfg.eta)
                         : nan;
    ++stats.steps;
    stats.sum_step_l1 += s.step_l1;
    stats.sum_step_l1_sq += s.step_l1_sq;
    stats.sum_br_l1 += s.br_l1;
    stats.max_gibbs_ratio = std::max(stats.max_gibbs_ratio, s.max_gibbs_ratio);
    stats.max_loglinear_dev = std::max(stats.max_loglinear_dev,
                                       s.loglinear_dev);
    for (const auto& tab : kernel.next()) {
      for (double v : tab.data()) stats.min_entry = std::min(stats.min_entry, v);
    }

    const bool on_grid = (t - 1) % traj.thinning == 0;
    if (on_grid || pinned.count(t)) {
      IterateRecord rec;
      rec.t = t;
      rec.policy = ProductPolicy(cur);
      rec.q_bar = kernel.q_bar();
      rec.best_response = ProductPolicy(kernel.best_response());
      rec.next = ProductPolicy(kernel.next());
      traj.retained.push_back(std::move(rec));
    }
    if (options.full_series || on_grid) traj.series.push_back(s);

    std::swap(cur, kernel.next());
    std::swap(log_cur, kernel.log_next());
    phi_cur = s.phi_reg_next;
  }
  traj.final_policy = ProductPolicy(cur);
  if (options.last_iterate) {
    traj.output = traj.final_policy;
  } else {
    const IterateRecord* rec = traj.find(traj.output_index);
    if (!rec) throw InternalError("output iterate was not retained");
    traj.output = rec->policy;
  }
  return traj;
}

std::vector<double> fixed_point_residual(const Game& model,
                                         const ProductPolicy& pi,
                                         const ProductPolicy& ref,
                                         double eta) {
  pi.check_shape(model);
  ref.check_shape(model);
  std::vector<double> out;
  for (int i = 0; i < model.num_players(); ++i) {
    const PlayerTable br = regularized_best_response(
        marginal_q(model.reward(i), model.space(), pi, i), ref.player(i), eta);
    double worst = 0.0;
    for (int x = 0; x < model.num_contexts(); ++x) {
      double d = 0.0;
      for (int a = 0; a < br.cols(); ++a) d += std::abs(pi.at(i, x)[a] - br(x, a));
      worst = std::max(worst, d);
    }
    out.push_back(worst);
  }
  return out;
}

namespace {

RopeSolution finish_rope(const Game& model, const ProductPolicy& ref,
                         const SolverConfig& cfg, ProductPolicy pi,
                         std::int64_t iterations) {
  RopeSolution sol;
  sol.policy = std::move(pi);
  sol.iterations = iterations;
  sol.residual = fixed_point_residual(model, sol.policy, ref, cfg.eta);
  sol.max_residual = *std::max_element(sol.residual.begin(), sol.residual.end());
  sol.converged = sol.max_residual <= cfg.fixed_point_tol;
  for (int i = 0; i < model.num_players(); ++i) {
    sol.values.push_back(
        regularized_value(model, sol.policy, ref, cfg.eta, i)
            .per_context_values);
  }
  return sol;
}

RopeSolution solve_rope_damped(const Game& model, const ProductPolicy& ref,
                               const SolverConfig& cfg) {
  const int m = model.num_players();
  // Without opponents the best response is fixed, so no damping is needed.
  const double lambda = m == 1 ? 1.0 : cfg.damping;
  std::vector<PlayerTable> cur = ref.players();
  std::vector<PlayerTable> q_bar = cur;
  std::vector<PlayerTable> best = cur;
  double best_residual = std::numeric_limits<double>::infinity();
  std::int64_t best_iter = 0;
  for (std::int64_t iter = 0;; ++iter) {
    std::vector<PlayerTable> br;
    for (int i = 0; i < m; ++i) {
      marginal_q_into(model.reward(i), model.space(), cur, i, q_bar[i]);
      br.push_back(regularized_best_response(q_bar[i], ref.player(i), cfg.eta));
    }
    double residual = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int x = 0; x < model.num_contexts(); ++x) {
        double d = 0.0;
        for (int a = 0; a < cur[i].cols(); ++a) {
          d += std::abs(cur[i](x, a) - br[i](x, a));
        }
        residual = std::max(residual, d);
      }
    }
    if (residual < best_residual) {
      best_residual = residual;
      best = cur;
      best_iter = iter;
    }
    if (residual <= cfg.fixed_point_tol || iter >= cfg.rope_max_iters) {
      return finish_rope(model, ref, cfg, ProductPolicy(best),
                         residual <= cfg.fixed_point_tol ? iter : best_iter);
    }
    for (int i = 0; i < m; ++i) {
      for (int x = 0; x < model.num_contexts(); ++x) {
        auto row = cur[i].row(x);
        double sum = 0.0;
        for (int a = 0; a < cur[i].cols(); ++a) {
          row[a] = (1.0 - lambda) * row[a] + lambda * br[i](x, a);
          sum += row[a];
        }
        for (double& v : row) v /= sum;
      }
    }
  }
}

RopeSolution solve_rope_opmd(const Game& model, const ProductPolicy& ref,
                             const SolverConfig& cfg) {
  OpmdKernel kernel(model, ref, cfg);
  std::vector<PlayerTable> cur = ref.players();
  std::vector<PlayerTable> log_cur = kernel.log_ref();
  StepScalars s;
  std::int64_t iter = 0;
  for (; iter < cfg.rope_max_iters; ++iter) {
    kernel.step(cur, log_cur, s);
    if (kernel.max_residual_from_last_step(cur) <= cfg.fixed_point_tol) break;
    std::swap(cur, kernel.next());
    std::swap(log_cur, kernel.log_next());
  }
  return finish_rope(model, ref, cfg, ProductPolicy(cur), iter);
}

}  // namespace

RopeSolution solve_rope(const Game& model, const ProductPolicy& ref,
                        const SolverConfig& cfg) {
  cfg.validate(model.num_players());
  check_inputs(model, ref);
  if (cfg.rope_method == RopeMethod::kOpmd) {
    return solve_rope_opmd(model, ref, cfg);
  }
  return solve_rope_damped(model, ref, cfg);
}

double regularized_empirical_potential(const JointTable& phi,
                                       const Game& model,
                                       const ProductPolicy& pi,
                                       const ProductPolicy& ref, double eta) {
  if (!(eta > 0.0)) throw Error("eta must be > 0");
  pi.check_shape(model);
  ref.check_shape(model);
  if (phi.rows() != model.num_contexts() ||
      phi.cols() != model.space().num_joint()) {
    throw Error("potential shape mismatch");
  }
  return phi_reg_tables(phi, model, pi.players(), ref, eta);
}

double regularized_empirical_potential(const Game& model,
                                       const ProductPolicy& pi,
                                       const ProductPolicy& ref, double eta) {
  if (!model.potential()) throw Error("game has no potential table");
  return regularized_empirical_potential(*model.potential(), model, pi, ref,
                                         eta);
}

std::string trajectory_policies_csv(const OpmdTrajectory& traj,
                                    const Game& model) {
  std::ostringstream out;
  out.precision(17);
  out << "t,player,context,action,prob\n";
  for (const auto& rec : traj.retained) {
    for (int i = 0; i < rec.policy.num_players(); ++i) {
      for (int x = 0; x < rec.policy.num_contexts(); ++x) {
        const auto row = rec.policy.at(i, x);
        for (std::size_t a = 0; a < row.size(); ++a) {
          out << rec.t << ',' << i << ',' << model.contexts()[x] << ',' << a
              << ',' << row[a] << '\n';
        }
      }
    }
  }
  return out.str();
}

std::string trajectory_scalars_csv(const OpmdTrajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  out << "t,phi_reg,sum_step_l1,sum_step_l1_sq,max_gibbs_ratio\n";
  for (const auto& s : traj.series) {
    out << s.t << ',';
    if (traj.has_potential) out << s.phi_reg;
    out << ',' << s.step_l1 << ',' << s.step_l1_sq << ',' << s.max_gibbs_ratio
        << '\n';
  }
  return out.str();
}

}  // namespace potlab
