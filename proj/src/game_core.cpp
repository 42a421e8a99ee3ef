#include "potlab/game_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "potlab/error.hpp"

namespace potlab {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error("kl_divergence: mismatched lengths " +
                std::to_string(p.size()) + " and " + std::to_string(q.size()));
  }
  double kl = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    if (q[a] <= 0.0) throw Error("absolute continuity violated");
    kl += p[a] * std::log(p[a] / q[a]);
  }
  // Rounding can leave a tiny negative for p == q up to representation.
  return std::max(kl, 0.0);
}

double log_sum_exp(std::span<const double> z) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

void marginal_q_into(const JointTable& q, const JointActionSpace& space,
                     std::span<const PlayerTable> players, int player,
                     PlayerTable& out) {
  const int m = space.num_players();
  const int contexts = q.rows();
  for (int x = 0; x < contexts; ++x) {
    auto row = out.row(x);
    std::fill(row.begin(), row.end(), 0.0);
    const auto qx = q.row(x);
    for (int j = 0; j < space.num_joint(); ++j) {
      const auto acts = space.actions(j);
      double w = 1.0;
      for (int k = 0; k < m; ++k) {
        if (k != player) w *= players[k](x, acts[k]);
      }
      row[acts[player]] += w * qx[j];
    }
  }
}

PlayerTable marginal_q(const JointTable& q, const JointActionSpace& space,
                       std::span<const PlayerTable> players, int player) {
  if (static_cast<int>(players.size()) != space.num_players() ||
      q.cols() != space.num_joint()) {
    throw Error("marginal_q: shape mismatch");
  }
  for (int k = 0; k < space.num_players(); ++k) {
    if (players[k].rows() != q.rows() || players[k].cols() != space.count(k)) {
      throw Error("marginal_q: policy shape mismatch");
    }
  }
  PlayerTable out(q.rows(), space.count(player));
  marginal_q_into(q, space, players, player, out);
  return out;
}

PlayerTable marginal_q(const JointTable& q, const JointActionSpace& space,
                       const ProductPolicy& pi, int player) {
  return marginal_q(q, space, pi.players(), player);
}

double expected_in_context(const JointTable& t, const JointActionSpace& space,
                           std::span<const PlayerTable> players, int x) {
  const int m = space.num_players();
  const auto tx = t.row(x);
  double s = 0.0;
  for (int j = 0; j < space.num_joint(); ++j) {
    const auto acts = space.actions(j);
    double w = 1.0;
    for (int k = 0; k < m; ++k) w *= players[k](x, acts[k]);
    s += w * tx[j];
  }
  return s;
}

double expected_value(const JointTable& t, const JointActionSpace& space,
                      std::span<const PlayerTable> players,
                      std::span<const double> rho) {
  double s = 0.0;
  for (int x = 0; x < t.rows(); ++x) {
    if (rho[x] == 0.0) continue;
    s += rho[x] * expected_in_context(t, space, players, x);
  }
  return s;
}

namespace {

void check_same_shape(const PlayerTable& a, const PlayerTable& b,
                      const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(what) + ": shape mismatch");
  }
}

void check_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error("eta must be > 0");
}

// z_a = ln ref(a) + eta Qbar(a) for one context.
void tilted_logits(std::span<const double> q_bar, std::span<const double> ref,
                   double eta, std::vector<double>& z) {
  z.resize(q_bar.size());
  for (std::size_t a = 0; a < q_bar.size(); ++a) {
    z[a] = (ref[a] > 0.0 ? std::log(ref[a])
                         : -std::numeric_limits<double>::infinity()) +
           eta * q_bar[a];
  }
}

}  // namespace

PlayerTable regularized_best_response(const PlayerTable& q_bar,
                                      const PlayerTable& ref, double eta) {
  check_same_shape(q_bar, ref, "regularized_best_response");
  check_eta(eta);
  PlayerTable out(q_bar.rows(), q_bar.cols());
  std::vector<double> z;
  for (int x = 0; x < q_bar.rows(); ++x) {
    tilted_logits(q_bar.row(x), ref.row(x), eta, z);
    const double lse = log_sum_exp(z);
    auto row = out.row(x);
    double sum = 0.0;
    for (std::size_t a = 0; a < z.size(); ++a) {
      row[a] = std::exp(z[a] - lse);
      sum += row[a];
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

std::vector<double> best_response_value(const PlayerTable& q_bar,
                                        const PlayerTable& ref, double eta) {
  check_same_shape(q_bar, ref, "best_response_value");
  check_eta(eta);
  std::vector<double> out(q_bar.rows());
  std::vector<double> z;
  for (int x = 0; x < q_bar.rows(); ++x) {
    tilted_logits(q_bar.row(x), ref.row(x), eta, z);
    out[x] = log_sum_exp(z) / eta;
  }
  return out;
}

namespace {

void check_policies(const Game& game, const ProductPolicy& pi,
                    const ProductPolicy& ref) {
  pi.check_shape(game);
  ref.check_shape(game);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Per-context regularized values of player i given its marginal payoff.
std::vector<double> values_from_marginal(const PlayerTable& q_bar,
                                         const ProductPolicy& pi,
                                         const ProductPolicy& ref, double eta,
                                         int player) {
  std::vector<double> v(q_bar.rows());
  for (int x = 0; x < q_bar.rows(); ++x) {
    v[x] = dot(pi.at(player, x), q_bar.row(x)) -
           kl_divergence(pi.at(player, x), ref.at(player, x)) / eta;
  }
  return v;
}

double rho_average(std::span<const double> rho, std::span<const double> v) {
  return dot(rho, v);
}

}  // namespace

RegularizedValueReport regularized_value(const Game& game,
                                         const ProductPolicy& pi,
                                         const ProductPolicy& ref, double eta,
                                         int player) {
  check_eta(eta);
  check_policies(game, pi, ref);
  const PlayerTable q_bar =
      marginal_q(game.reward(player), game.space(), pi, player);
  RegularizedValueReport report;
  report.per_context_values = values_from_marginal(q_bar, pi, ref, eta, player);
  report.global_return =
      rho_average(game.context_dist(), report.per_context_values);
  return report;
}

NashGapReport nash_gap_report(const Game& game, const ProductPolicy& pi,
                              const ProductPolicy& ref, double eta) {
  check_eta(eta);
  check_policies(game, pi, ref);
  NashGapReport report;
  for (int i = 0; i < game.num_players(); ++i) {
    const PlayerTable q_bar = marginal_q(game.reward(i), game.space(), pi, i);
    const auto v_dagger = best_response_value(q_bar, ref.player(i), eta);
    const auto v = values_from_marginal(q_bar, pi, ref, eta, i);
    double g = 0.0;
    for (int x = 0; x < game.num_contexts(); ++x) {
      g += game.context_dist()[x] * (v_dagger[x] - v[x]);
    }
    report.per_player.push_back(g);
    report.gap += g;
  }
  if (report.gap < -kGapClampTol) {
    throw InternalError("nash_gap is negative beyond tolerance: " +
                        std::to_string(report.gap));
  }
  if (report.gap < 0.0) {
    report.gap = 0.0;
    report.clamped = true;
  }
  return report;
}

double nash_gap(const Game& game, const ProductPolicy& pi,
                const ProductPolicy& ref, double eta) {
  return nash_gap_report(game, pi, ref, eta).gap;
}

double GapDecomposition::eps_pot_sum() const {
  double s = 0.0;
  for (double v : eps_pot) s += v;
  return s;
}
double GapDecomposition::delta_br_sum() const {
  double s = 0.0;
  for (double v : delta_br) s += v;
  return s;
}
double GapDecomposition::delta_iter_sum() const {
  double s = 0.0;
  for (double v : delta_iter) s += v;
  return s;
}

GapDecomposition gap_decomposition(const Game& game,
                                   std::span<const JointTable> q_hat,
                                   const ProductPolicy& pi,
                                   const ProductPolicy& ref, double eta) {
  check_eta(eta);
  check_policies(game, pi, ref);
  if (static_cast<int>(q_hat.size()) != game.num_players()) {
    throw Error("gap_decomposition: one estimate per player required");
  }
  const auto rho = game.context_dist();
  GapDecomposition out;
  for (int i = 0; i < game.num_players(); ++i) {
    if (q_hat[i].rows() != game.num_contexts() ||
        q_hat[i].cols() != game.space().num_joint()) {
      throw Error("gap_decomposition: estimate shape mismatch");
    }
    const PlayerTable q_true = marginal_q(game.reward(i), game.space(), pi, i);
    const PlayerTable q_est = marginal_q(q_hat[i], game.space(), pi, i);
    const auto vd = best_response_value(q_true, ref.player(i), eta);
    const auto vd_hat = best_response_value(q_est, ref.player(i), eta);
    const auto v = values_from_marginal(q_true, pi, ref, eta, i);
    const auto v_hat = values_from_marginal(q_est, pi, ref, eta, i);
    double eps = 0.0, br = 0.0, iter = 0.0;
    for (int x = 0; x < game.num_contexts(); ++x) {
      eps += rho[x] * (vd_hat[x] - v_hat[x]);
      br += rho[x] * (vd[x] - vd_hat[x]);
      iter += rho[x] * (v_hat[x] - v[x]);
    }
    out.eps_pot.push_back(eps);
    out.delta_br.push_back(br);
    out.delta_iter.push_back(iter);
    out.total_gap += eps + br + iter;
  }
  return out;
}

double unregularized_exploitability(const Game& game,
                                    const ProductPolicy& pi) {
  pi.check_shape(game);
  double total = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const PlayerTable q_bar = marginal_q(game.reward(i), game.space(), pi, i);
    for (int x = 0; x < game.num_contexts(); ++x) {
      const auto row = q_bar.row(x);
      const double best = *std::max_element(row.begin(), row.end());
      total += game.context_dist()[x] * (best - dot(pi.at(i, x), row));
    }
  }
  return total;
}

}  // namespace potlab
