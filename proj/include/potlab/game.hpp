#ifndef POTLAB_GAME_HPP_
#define POTLAB_GAME_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace potlab {

// Dense row-major table of doubles. Rows are contexts; columns are joint
// actions (JointTable) or one player's own actions (PlayerTable). The tag
// keeps the two from being mixed up.
template <class Tag>
class Table {
 public:
  Table() = default;
  Table(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        values_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double operator()(int r, int c) const { return values_[offset(r, c)]; }
  double& operator()(int r, int c) { return values_[offset(r, c)]; }
  std::span<const double> row(int r) const {
    return {values_.data() + offset(r, 0), static_cast<std::size_t>(cols_)};
  }
  std::span<double> row(int r) {
    return {values_.data() + offset(r, 0), static_cast<std::size_t>(cols_)};
  }
  const std::vector<double>& data() const { return values_; }
  std::vector<double>& data() { return values_; }
  bool operator==(const Table&) const = default;

 private:
  std::size_t offset(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

struct JointTag {};
struct PlayerTag {};
// (context, joint action) -> value. Rewards, reward estimates, potentials,
// behavior distributions.
using JointTable = Table<JointTag>;
// (context, own action) -> value. Marginal payoffs and one player's policy.
using PlayerTable = Table<PlayerTag>;

// Mixed-radix indexing of joint actions. Player 0 is the most significant
// digit, matching nested arrays [a_1]...[a_m].
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> action_counts);

  int num_players() const { return static_cast<int>(counts_.size()); }
  int num_joint() const { return num_joint_; }
  int count(int player) const { return counts_[player]; }
  const std::vector<int>& counts() const { return counts_; }
  int stride(int player) const { return strides_[player]; }

  int action(int joint, int player) const {
    return decoded_[static_cast<std::size_t>(joint) * counts_.size() + player];
  }
  std::span<const int> actions(int joint) const {
    return {decoded_.data() + static_cast<std::size_t>(joint) * counts_.size(),
            counts_.size()};
  }
  int index(std::span<const int> actions) const;
  // Joint index after replacing `player`'s action with `a`.
  int with_action(int joint, int player, int a) const {
    return joint + (a - action(joint, player)) * strides_[player];
  }
  bool operator==(const JointActionSpace& o) const {
    return counts_ == o.counts_;
  }

 private:
  std::vector<int> counts_;
  std::vector<int> strides_;
  std::vector<int> decoded_;
  int num_joint_ = 0;
};

// Tabular m-player contextual bandit with optional potential table.
class Game {
 public:
  Game(std::vector<std::string> contexts, std::vector<double> context_dist,
       std::vector<int> action_counts, std::vector<JointTable> rewards);

  int num_players() const { return space_.num_players(); }
  int num_contexts() const { return static_cast<int>(contexts_.size()); }
  const JointActionSpace& space() const { return space_; }
  const std::vector<std::string>& contexts() const { return contexts_; }
  std::span<const double> context_dist() const { return context_dist_; }
  const JointTable& reward(int player) const { return rewards_[player]; }
  const std::vector<JointTable>& rewards() const { return rewards_; }
  const std::optional<JointTable>& potential() const { return potential_; }
  std::optional<double> declared_alpha() const { return declared_alpha_; }

  void set_potential(JointTable phi, double declared_alpha);
  void clear_potential();
  int context_index(std::string_view id) const;
  bool same_structure(const Game& other) const;
  // Same contexts, distribution and action sets with new payoff tables.
  // The potential is dropped since it was declared for the old payoffs.
  Game with_rewards(std::vector<JointTable> rewards) const;

 private:
  std::vector<std::string> contexts_;
  std::vector<double> context_dist_;
  JointActionSpace space_;
  std::vector<JointTable> rewards_;
  std::optional<JointTable> potential_;
  std::optional<double> declared_alpha_;
};

// Per-player, per-context action distributions. Validated on construction;
// the smallest entry is recorded as nu_min.
class ProductPolicy {
 public:
  ProductPolicy() = default;
  explicit ProductPolicy(std::vector<PlayerTable> players);

  static ProductPolicy uniform(const JointActionSpace& space,
                               int num_contexts);
  static ProductPolicy uniform(const Game& game);

  int num_players() const { return static_cast<int>(players_.size()); }
  int num_contexts() const {
    return players_.empty() ? 0 : players_.front().rows();
  }
  std::span<const double> at(int player, int context) const {
    return players_[player].row(context);
  }
  const PlayerTable& player(int i) const { return players_[i]; }
  const std::vector<PlayerTable>& players() const { return players_; }
  double nu_min() const { return nu_min_; }
  ProductPolicy with_player(int i, PlayerTable table) const;
  // Throws unless the policy has one table per player of the game's shape.
  void check_shape(const Game& game) const;
  bool operator==(const ProductPolicy& o) const {
    return players_ == o.players_;
  }

 private:
  std::vector<PlayerTable> players_;
  double nu_min_ = 0.0;
};

inline constexpr double kNormalizationTol = 1e-12;

// Throws potlab::Error unless v is a probability vector within 1e-12.
void check_distribution(std::span<const double> v, std::string_view what);

}  // namespace potlab

#endif  // POTLAB_GAME_HPP_
