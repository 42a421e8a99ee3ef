#include "potlab/game_zoo.hpp"

#include <algorithm>
#include <cmath>

#include "potlab/error.hpp"
#include "potlab/game_core.hpp"
#include "potlab/rng.hpp"

namespace potlab {

std::string family_name(GameFamily f) {
  switch (f) {
    case GameFamily::kTeam: return "team";
    case GameFamily::kPerturbedTeam: return "perturbed_team";
    case GameFamily::kCongestion: return "congestion";
    case GameFamily::kRandomGeneralSum: return "random_general_sum";
  }
  throw InternalError("unknown game family");
}

GameFamily family_from_name(const std::string& name) {
  if (name == "team") return GameFamily::kTeam;
  if (name == "perturbed_team") return GameFamily::kPerturbedTeam;
  if (name == "congestion") return GameFamily::kCongestion;
  if (name == "random_general_sum") return GameFamily::kRandomGeneralSum;
  throw Error("unknown game family '" + name + "'");
}

long long alpha_enumeration_size(const JointActionSpace& space,
                                 int num_contexts) {
  long long total = 0;
  for (int i = 0; i < space.num_players(); ++i) {
    total += static_cast<long long>(num_contexts) * space.num_joint() *
             space.count(i);
  }
  return total;
}

void GameSpec::validate() const {
  if (num_players < 1) throw Error("num_players must be >= 1");
  if (num_contexts < 1) throw Error("num_contexts must be >= 1");
  if (static_cast<int>(action_counts.size()) != num_players) {
    throw Error("action_counts must list one count per player");
  }
  for (int c : action_counts) {
    if (c < 1) throw Error("action counts must be >= 1");
  }
  if (!(perturbation_scale >= 0.0 && perturbation_scale <= 0.5)) {
    throw Error("perturbation_scale must lie in [0, 0.5]");
  }
  if (!(reward_lo >= 0.0 && reward_lo <= reward_hi && reward_hi <= 1.0)) {
    throw Error("reward range must satisfy 0 <= lo <= hi <= 1");
  }
  if (alpha_enumeration_size(JointActionSpace(action_counts), num_contexts) >
      kMaxAlphaEvaluations) {
    throw Error("game too large: alpha enumeration exceeds 1e7 evaluations");
  }
}

namespace {

std::vector<std::string> context_ids(int n) {
  std::vector<std::string> ids;
  for (int x = 0; x < n; ++x) ids.push_back("x" + std::to_string(x));
  return ids;
}

std::vector<double> uniform_dist(int n) {
  return std::vector<double>(n, 1.0 / n);
}

JointTable draw_table(Rng& rng, int contexts, int joint, double lo,
                      double hi) {
  JointTable t(contexts, joint);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

void require_family(const GameSpec& spec, GameFamily f) {
  if (spec.family != f) {
    throw Error("spec family is " + family_name(spec.family) + ", expected " +
                family_name(f));
  }
  spec.validate();
}

}  // namespace

Game make_team_game(const GameSpec& spec) {
  require_family(spec, GameFamily::kTeam);
  Rng rng(spec.seed);
  const JointActionSpace space(spec.action_counts);
  JointTable common = draw_table(rng, spec.num_contexts, space.num_joint(),
                                 spec.reward_lo, spec.reward_hi);
  Game game(context_ids(spec.num_contexts), uniform_dist(spec.num_contexts),
            spec.action_counts,
            std::vector<JointTable>(spec.num_players, common));
  game.set_potential(std::move(common), 0.0);
  return game;
}

Game make_perturbed_team_game(const GameSpec& spec) {
  require_family(spec, GameFamily::kPerturbedTeam);
  Rng rng(spec.seed);
  const JointActionSpace space(spec.action_counts);
  // The common tensor comes first so scale 0 reproduces the team game.
  JointTable common = draw_table(rng, spec.num_contexts, space.num_joint(),
                                 spec.reward_lo, spec.reward_hi);
  std::vector<JointTable> rewards;
  for (int i = 0; i < spec.num_players; ++i) {
    JointTable r = common;
    for (double& v : r.data()) {
      const double direction = rng.uniform(-1.0, 1.0);
      v = std::clamp(v + spec.perturbation_scale * direction, 0.0, 1.0);
    }
    rewards.push_back(std::move(r));
  }
  Game game(context_ids(spec.num_contexts), uniform_dist(spec.num_contexts),
            spec.action_counts, std::move(rewards));
  const double alpha = estimate_alpha(game, common);
  game.set_potential(std::move(common), alpha);
  return game;
}

Game congestion_game_from_costs(
    const std::vector<std::vector<std::vector<double>>>& costs,
    int num_players) {
  if (costs.empty()) throw Error("congestion game needs at least one context");
  const int resources = static_cast<int>(costs.front().size());
  if (resources < 1) throw Error("congestion game needs a resource");
  const int contexts = static_cast<int>(costs.size());
  for (const auto& per_context : costs) {
    if (static_cast<int>(per_context.size()) != resources) {
      throw Error("congestion costs: resource count differs across contexts");
    }
    for (const auto& c : per_context) {
      if (static_cast<int>(c.size()) != num_players) {
        throw Error("congestion costs: need one cost per load 1..m");
      }
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!(c[k] >= 0.0 && c[k] <= 1.0)) {
          throw Error("congestion costs must lie in [0, 1]");
        }
        if (k > 0 && c[k] < c[k - 1]) {
          throw Error("congestion costs must be nondecreasing in load");
        }
      }
    }
  }
  const JointActionSpace space(std::vector<int>(num_players, resources));
  std::vector<JointTable> rewards(num_players,
                                  JointTable(contexts, space.num_joint()));
  // Rosenthal: Phi = -sum_e sum_{k <= load_e} c_e(k). Loads sum to m and
  // costs lie in [0, 1], so Phi already lies in [-m, 0] and needs no shift.
  JointTable phi(contexts, space.num_joint());
  std::vector<int> load(resources);
  for (int x = 0; x < contexts; ++x) {
    for (int j = 0; j < space.num_joint(); ++j) {
      std::fill(load.begin(), load.end(), 0);
      for (int i = 0; i < num_players; ++i) ++load[space.action(j, i)];
      for (int i = 0; i < num_players; ++i) {
        const int e = space.action(j, i);
        rewards[i](x, j) = 1.0 - costs[x][e][load[e] - 1];
      }
      double p = 0.0;
      for (int e = 0; e < resources; ++e) {
        for (int k = 0; k < load[e]; ++k) p -= costs[x][e][k];
      }
      phi(x, j) = p;
    }
  }
  Game game(context_ids(contexts), uniform_dist(contexts), space.counts(),
            std::move(rewards));
  game.set_potential(std::move(phi), 0.0);
  return game;
}

Game make_congestion_game(const GameSpec& spec) {
  if (spec.family != GameFamily::kCongestion) {
    throw Error("spec family is " + family_name(spec.family) +
                ", expected congestion");
  }
  for (int c : spec.action_counts) {
    if (c != spec.action_counts.front()) {
      throw Error("congestion requires shared resource set");
    }
  }
  spec.validate();
  Rng rng(spec.seed);
  const int resources = spec.action_counts.front();
  std::vector<std::vector<std::vector<double>>> costs(
      spec.num_contexts, std::vector<std::vector<double>>(resources));
  for (auto& per_context : costs) {
    for (auto& c : per_context) {
      c.resize(spec.num_players);
      for (double& v : c) v = rng.uniform(spec.reward_lo, spec.reward_hi);
      std::sort(c.begin(), c.end());
    }
  }
  return congestion_game_from_costs(costs, spec.num_players);
}

Game make_random_general_sum(const GameSpec& spec) {
  require_family(spec, GameFamily::kRandomGeneralSum);
  Rng rng(spec.seed);
  const JointActionSpace space(spec.action_counts);
  std::vector<JointTable> rewards;
  for (int i = 0; i < spec.num_players; ++i) {
    rewards.push_back(draw_table(rng, spec.num_contexts, space.num_joint(),
                                 spec.reward_lo, spec.reward_hi));
  }
  JointTable phi(spec.num_contexts, space.num_joint());
  for (std::size_t k = 0; k < phi.data().size(); ++k) {
    double s = 0.0;
    for (const auto& r : rewards) s += r.data()[k];
    phi.data()[k] = s / spec.num_players;
  }
  Game game(context_ids(spec.num_contexts), uniform_dist(spec.num_contexts),
            spec.action_counts, std::move(rewards));
  const double alpha = estimate_alpha(game, phi);
  game.set_potential(std::move(phi), alpha);
  return game;
}

Game make_game(const GameSpec& spec) {
  switch (spec.family) {
    case GameFamily::kTeam: return make_team_game(spec);
    case GameFamily::kPerturbedTeam: return make_perturbed_team_game(spec);
    case GameFamily::kCongestion: return make_congestion_game(spec);
    case GameFamily::kRandomGeneralSum: return make_random_general_sum(spec);
  }
  throw InternalError("unknown game family");
}

double estimate_alpha(const Game& game, const JointTable& phi) {
  const auto& space = game.space();
  if (phi.rows() != game.num_contexts() || phi.cols() != space.num_joint()) {
    throw Error("estimate_alpha: potential shape mismatch");
  }
  if (alpha_enumeration_size(space, game.num_contexts()) >
      kMaxAlphaEvaluations) {
    throw Error("estimate_alpha: enumeration exceeds 1e7 evaluations");
  }
  const auto rho = game.context_dist();
  double alpha = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const JointTable& r = game.reward(i);
    double alpha_i = 0.0;
    for (int x = 0; x < game.num_contexts(); ++x) {
      double worst = 0.0;
      for (int j = 0; j < space.num_joint(); ++j) {
        const double base = r(x, j) - phi(x, j);
        for (int a = 0; a < space.count(i); ++a) {
          const int dev = space.with_action(j, i, a);
          worst = std::max(worst, std::abs(r(x, dev) - phi(x, dev) - base));
        }
      }
      alpha_i += rho[x] * worst;
    }
    alpha = std::max(alpha, alpha_i);
  }
  return alpha;
}

double unilateral_mismatch(const Game& game, const JointTable& phi,
                           const ProductPolicy& pi, int player,
                           const PlayerTable& deviation) {
  const ProductPolicy dev = pi.with_player(player, deviation);
  const auto& space = game.space();
  const auto rho = game.context_dist();
  const double dj = expected_value(game.reward(player), space, dev.players(),
                                   rho) -
                    expected_value(game.reward(player), space, pi.players(),
                                   rho);
  const double dphi = expected_value(phi, space, dev.players(), rho) -
                      expected_value(phi, space, pi.players(), rho);
  return std::abs(dj - dphi);
}

}  // namespace potlab
