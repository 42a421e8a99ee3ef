#include "potlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "potlab/error.hpp"

namespace potlab {

void check_distribution(std::span<const double> v, std::string_view what) {
  if (v.empty()) throw Error(std::string(what) + ": empty distribution");
  double sum = 0.0;
  for (double p : v) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(std::string(what) + ": negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormalizationTol) {
    throw Error(std::string(what) + ": probabilities sum to " +
                std::to_string(sum));
  }
}

JointActionSpace::JointActionSpace(std::vector<int> action_counts)
    : counts_(std::move(action_counts)) {
  if (counts_.empty()) throw Error("game needs at least one player");
  const int m = num_players();
  strides_.assign(m, 1);
  long long total = 1;
  for (int i = m - 1; i >= 0; --i) {
    if (counts_[i] < 1) throw Error("action counts must be positive");
    strides_[i] = static_cast<int>(total);
    total *= counts_[i];
    if (total > 50'000'000) throw Error("joint action space too large");
  }
  num_joint_ = static_cast<int>(total);
  decoded_.resize(static_cast<std::size_t>(num_joint_) * m);
  for (int j = 0; j < num_joint_; ++j) {
    for (int i = 0; i < m; ++i) {
      decoded_[static_cast<std::size_t>(j) * m + i] =
          (j / strides_[i]) % counts_[i];
    }
  }
}

int JointActionSpace::index(std::span<const int> actions) const {
  if (static_cast<int>(actions.size()) != num_players()) {
    throw Error("joint action has wrong number of players");
  }
  int j = 0;
  for (int i = 0; i < num_players(); ++i) {
    if (actions[i] < 0 || actions[i] >= counts_[i]) {
      throw Error("action index out of range");
    }
    j += actions[i] * strides_[i];
  }
  return j;
}

namespace {

void check_joint_shape(const JointTable& t, int num_contexts, int num_joint,
                       std::string_view what) {
  if (t.rows() != num_contexts || t.cols() != num_joint) {
    throw Error(std::string(what) + ": table shape mismatch");
  }
}

}  // namespace

Game::Game(std::vector<std::string> contexts, std::vector<double> context_dist,
           std::vector<int> action_counts, std::vector<JointTable> rewards)
    : contexts_(std::move(contexts)),
      context_dist_(std::move(context_dist)),
      space_(std::move(action_counts)),
      rewards_(std::move(rewards)) {
  if (contexts_.empty()) throw Error("game needs at least one context");
  if (context_dist_.size() != contexts_.size()) {
    throw Error("context_dist length differs from contexts");
  }
  check_distribution(context_dist_, "context_dist");
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    for (std::size_t b = a + 1; b < contexts_.size(); ++b) {
      if (contexts_[a] == contexts_[b]) {
        throw Error("duplicate context id '" + contexts_[a] + "'");
      }
    }
  }
  if (static_cast<int>(rewards_.size()) != num_players()) {
    throw Error("rewards must have one table per player");
  }
  for (const auto& r : rewards_) {
    check_joint_shape(r, num_contexts(), space_.num_joint(), "rewards");
    for (double v : r.data()) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error("reward entry outside [0,1]");
    }
  }
}

void Game::set_potential(JointTable phi, double declared_alpha) {
  check_joint_shape(phi, num_contexts(), space_.num_joint(), "potential");
  for (double v : phi.data()) {
    if (!std::isfinite(v)) throw Error("potential entry not finite");
  }
  if (!(declared_alpha >= 0.0)) throw Error("declared_alpha must be >= 0");
  potential_ = std::move(phi);
  declared_alpha_ = declared_alpha;
}

void Game::clear_potential() {
  potential_.reset();
  declared_alpha_.reset();
}

int Game::context_index(std::string_view id) const {
  for (int x = 0; x < num_contexts(); ++x) {
    if (contexts_[x] == id) return x;
  }
  throw Error("unknown context id '" + std::string(id) + "'");
}

bool Game::same_structure(const Game& other) const {
  return contexts_ == other.contexts_ &&
         context_dist_ == other.context_dist_ && space_ == other.space_;
}

Game Game::with_rewards(std::vector<JointTable> rewards) const {
  return Game(contexts_, context_dist_, space_.counts(), std::move(rewards));
}

ProductPolicy::ProductPolicy(std::vector<PlayerTable> players)
    : players_(std::move(players)) {
  if (players_.empty()) throw Error("policy needs at least one player");
  const int contexts = players_.front().rows();
  nu_min_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < players_.size(); ++i) {
    const auto& t = players_[i];
    if (t.rows() != contexts || t.cols() < 1) {
      throw Error("policy tables have inconsistent shapes");
    }
    for (int x = 0; x < contexts; ++x) {
      check_distribution(t.row(x), "policy of player " + std::to_string(i));
    }
    for (double v : t.data()) nu_min_ = std::min(nu_min_, v);
  }
}

ProductPolicy ProductPolicy::uniform(const JointActionSpace& space,
                                     int num_contexts) {
  std::vector<PlayerTable> tables;
  for (int i = 0; i < space.num_players(); ++i) {
    tables.emplace_back(num_contexts, space.count(i), 1.0 / space.count(i));
  }
  return ProductPolicy(std::move(tables));
}

ProductPolicy ProductPolicy::uniform(const Game& game) {
  return uniform(game.space(), game.num_contexts());
}

ProductPolicy ProductPolicy::with_player(int i, PlayerTable table) const {
  auto tables = players_;
  tables.at(i) = std::move(table);
  return ProductPolicy(std::move(tables));
}

void ProductPolicy::check_shape(const Game& game) const {
  if (num_players() != game.num_players() ||
      num_contexts() != game.num_contexts()) {
    throw Error("policy does not match game shape");
  }
  for (int i = 0; i < num_players(); ++i) {
    if (players_[i].cols() != game.space().count(i)) {
      throw Error("policy action count mismatch for player " +
                  std::to_string(i));
    }
  }
}

}  // namespace potlab
