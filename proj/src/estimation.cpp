#include "potlab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "potlab/error.hpp"
#include "potlab/game_zoo.hpp"
#include "potlab/rng.hpp"

namespace potlab {

std::uint64_t FunctionClass::hash(int player) const {
  std::uint64_t h = fnv1a64("function_class");
  for (const auto& t : candidates.at(player)) {
    const int dims[2] = {t.rows(), t.cols()};
    h = fnv1a64(dims, sizeof(dims), h);
    h = fnv1a64(t.data().data(), t.data().size() * sizeof(double), h);
  }
  return h;
}

FunctionClass build_tabular_class(const Game& game, int num_distractors,
                                  double perturb_scale, std::uint64_t seed) {
  if (num_distractors < 0) throw Error("num_distractors must be >= 0");
  if (!(perturb_scale >= 0.0)) throw Error("perturb_scale must be >= 0");
  FunctionClass cls;
  cls.realizable = true;
  for (int i = 0; i < game.num_players(); ++i) {
    Rng rng(derive_seed(seed, "distractor", static_cast<std::uint64_t>(i)));
    std::vector<JointTable> list{game.reward(i)};
    int dropped = 0;
    for (int k = 0; k < num_distractors; ++k) {
      JointTable f = game.reward(i);
      for (double& v : f.data()) {
        v = std::clamp(v + rng.uniform(-perturb_scale, perturb_scale), 0.0,
                       1.0);
      }
      if (std::find(list.begin(), list.end(), f) != list.end()) {
        ++dropped;
      } else {
        list.push_back(std::move(f));
      }
    }
    cls.candidates.push_back(std::move(list));
    cls.duplicates_removed.push_back(dropped);
  }
  return cls;
}

namespace {

// Per-cell sufficient statistics of one player's observed rewards.
struct CellStats {
  std::vector<double> count;
  std::vector<double> mean;
  double within = 0.0;  // sum of squared deviations from the cell means
};

CellStats cell_stats(const Dataset& data, int player, int contexts,
                     int joint) {
  CellStats s;
  const std::size_t cells = static_cast<std::size_t>(contexts) * joint;
  s.count.assign(cells, 0.0);
  s.mean.assign(cells, 0.0);
  std::vector<double> m2(cells, 0.0);
  // Welford updates in sample order keep the result deterministic.
  for (const auto& sample : data.samples) {
    const std::size_t c =
        static_cast<std::size_t>(sample.context) * joint + sample.joint;
    const double r = sample.rewards[player];
    s.count[c] += 1.0;
    const double d = r - s.mean[c];
    s.mean[c] += d / s.count[c];
    m2[c] += d * (r - s.mean[c]);
  }
  for (double v : m2) s.within += v;
  return s;
}

}  // namespace

QEstimate least_squares_fit(const Dataset& data, const FunctionClass& cls,
                            int player) {
  if (data.samples.empty()) throw Error("least_squares_fit: empty dataset");
  if (player < 0 || player >= static_cast<int>(cls.candidates.size()) ||
      cls.candidates[player].empty()) {
    throw Error("least_squares_fit: no candidates for player");
  }
  const auto& list = cls.candidates[player];
  const int contexts = list.front().rows();
  const int joint = list.front().cols();
  for (const auto& s : data.samples) {
    if (s.context < 0 || s.context >= contexts || s.joint < 0 ||
        s.joint >= joint ||
        static_cast<int>(s.rewards.size()) <= player) {
      throw Error("least_squares_fit: sample does not match class shape");
    }
  }
  const CellStats stats = cell_stats(data, player, contexts, joint);
  QEstimate best;
  best.player = player;
  best.chosen_index = -1;
  for (int k = 0; k < static_cast<int>(list.size()); ++k) {
    // sum_s (f - r_s)^2 = sum_cells count (f - mean)^2 + within-cell SS.
    double loss = stats.within;
    const auto& f = list[k].data();
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (stats.count[c] == 0.0) continue;
      const double d = f[c] - stats.mean[c];
      loss += stats.count[c] * d * d;
    }
    if (best.chosen_index < 0 || loss < best.empirical_loss) {
      best.chosen_index = k;
      best.empirical_loss = loss;
    }
  }
  best.table = list[best.chosen_index];
  for (double v : best.table.data()) {
    // Both Qhat and r lie in [0, 1], so ||Z||_inf <= 1.
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InternalError("fitted table leaves [0, 1]");
    }
  }
  best.class_hash = cls.hash(player);
  return best;
}

std::vector<QEstimate> least_squares_fit_all(const Dataset& data,
                                             const FunctionClass& cls) {
  std::vector<QEstimate> out;
  for (int i = 0; i < static_cast<int>(cls.candidates.size()); ++i) {
    out.push_back(least_squares_fit(data, cls, i));
  }
  return out;
}

JointTable residual(const QEstimate& q_hat, const Game& game) {
  const JointTable& r = game.reward(q_hat.player);
  if (q_hat.table.rows() != r.rows() || q_hat.table.cols() != r.cols()) {
    throw Error("residual: estimate shape mismatch");
  }
  JointTable z = q_hat.table;
  for (std::size_t k = 0; k < z.data().size(); ++k) z.data()[k] -= r.data()[k];
  return z;
}

double in_sample_sq_error(const QEstimate& q_hat, const Game& game,
                          const BehaviorDistribution& mu) {
  const JointTable z = residual(q_hat, game);
  if (mu.table.rows() != z.rows() || mu.table.cols() != z.cols()) {
    throw Error("in_sample_sq_error: behavior shape mismatch");
  }
  double total = 0.0;
  for (int x = 0; x < z.rows(); ++x) {
    double inner = 0.0;
    for (int j = 0; j < z.cols(); ++j) {
      inner += mu.table(x, j) * z(x, j) * z(x, j);
    }
    total += game.context_dist()[x] * inner;
  }
  return total;
}

std::vector<JointTable> estimate_tables(const std::vector<QEstimate>& est) {
  std::vector<JointTable> out;
  for (const auto& e : est) out.push_back(e.table);
  return out;
}

Game empirical_game(const Game& truth, const std::vector<QEstimate>& est) {
  if (static_cast<int>(est.size()) != truth.num_players()) {
    throw Error("empirical_game: one estimate per player required");
  }
  Game model = truth.with_rewards(estimate_tables(est));
  if (truth.potential()) {
    const double alpha = estimate_alpha(model, *truth.potential());
    model.set_potential(*truth.potential(), alpha);
  }
  return model;
}

FastRateReport check_fast_rate_bound(int trials, int n,
                                     const FunctionClass& cls,
                                     const Game& game,
                                     const BehaviorDistribution& mu,
                                     double delta, double noise_sigma,
                                     std::uint64_t seed) {
  if (trials < 1 || n < 1) throw Error("check_fast_rate_bound: bad sizes");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0, 1)");
  FastRateReport report;
  report.trials = trials;
  int largest = 0;
  for (int i = 0; i < game.num_players(); ++i) {
    largest = std::max(largest, cls.size(i));
  }
  report.threshold = 30.0 * std::log(2.0 * largest / delta) / n;
  for (int k = 0; k < trials; ++k) {
    const Dataset data =
        sample_dataset(game, mu, n,
                       derive_seed(seed, "fast_rate",
                                   static_cast<std::uint64_t>(k)),
                       noise_sigma);
    bool ok = true;
    for (int i = 0; i < game.num_players(); ++i) {
      const double threshold_i =
          30.0 * std::log(2.0 * cls.size(i) / delta) / n;
      const double err =
          in_sample_sq_error(least_squares_fit(data, cls, i), game, mu);
      report.worst_error = std::max(report.worst_error, err);
      ok = ok && err <= threshold_i;
    }
    if (ok) ++report.passes;
  }
  report.fraction = static_cast<double>(report.passes) / trials;
  report.pass = report.fraction >= 1.0 - delta;
  return report;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw Error("");
    return v;
  } catch (...) {
    throw Error("field '" + field + "': expected hex string");
  }
}

}  // namespace

Json function_class_to_json(const FunctionClass& cls, const Game& game) {
  Json j;
  j["realizable"] = cls.realizable;
  j["duplicates_removed"] = cls.duplicates_removed;
  Json per_player = Json::array();
  for (const auto& list : cls.candidates) {
    Json arr = Json::array();
    for (const auto& t : list) {
      arr.push_back(joint_table_to_json(t, game.space()));
    }
    per_player.push_back(std::move(arr));
  }
  j["candidates"] = std::move(per_player);
  return j;
}

FunctionClass function_class_from_json(const Json& j, const Game& game) {
  FunctionClass cls;
  cls.realizable = require_field(j, "realizable", "").get<bool>();
  const Json& per_player = require_field(j, "candidates", "");
  if (!per_player.is_array() ||
      static_cast<int>(per_player.size()) != game.num_players()) {
    throw Error("field 'candidates': expected one list per player");
  }
  for (std::size_t i = 0; i < per_player.size(); ++i) {
    std::vector<JointTable> list;
    for (std::size_t k = 0; k < per_player[i].size(); ++k) {
      list.push_back(joint_table_from_json(
          per_player[i][k], game.space(), game.num_contexts(),
          "candidates[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    }
    if (list.empty()) throw Error("field 'candidates': empty class");
    cls.candidates.push_back(std::move(list));
  }
  if (j.contains("duplicates_removed")) {
    cls.duplicates_removed = j["duplicates_removed"].get<std::vector<int>>();
  } else {
    cls.duplicates_removed.assign(game.num_players(), 0);
  }
  return cls;
}

Json estimates_to_json(const std::vector<QEstimate>& est, const Game& game) {
  Json arr = Json::array();
  for (const auto& e : est) {
    Json j;
    j["player"] = e.player;
    j["chosen_index"] = e.chosen_index;
    j["empirical_loss"] = e.empirical_loss;
    j["class_hash"] = hex64(e.class_hash);
    j["table"] = joint_table_to_json(e.table, game.space());
    arr.push_back(std::move(j));
  }
  return Json{{"estimates", std::move(arr)}};
}

std::vector<QEstimate> estimates_from_json(const Json& j, const Game& game) {
  const Json& arr = require_field(j, "estimates", "");
  if (!arr.is_array() || static_cast<int>(arr.size()) != game.num_players()) {
    throw Error("field 'estimates': expected one entry per player");
  }
  std::vector<QEstimate> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string path = "estimates[" + std::to_string(k) + "]";
    QEstimate e;
    e.player = static_cast<int>(
        json_integer(require_field(arr[k], "player", path), path + ".player"));
    if (e.player != static_cast<int>(k)) {
      throw Error("field '" + path + ".player': estimates must be in order");
    }
    e.chosen_index = static_cast<int>(json_integer(
        require_field(arr[k], "chosen_index", path), path + ".chosen_index"));
    e.empirical_loss = json_number(
        require_field(arr[k], "empirical_loss", path), path + ".empirical_loss");
    e.class_hash = parse_hex64(
        json_string(require_field(arr[k], "class_hash", path),
                    path + ".class_hash"),
        path + ".class_hash");
    e.table = joint_table_from_json(require_field(arr[k], "table", path),
                                    game.space(), game.num_contexts(),
                                    path + ".table");
    for (double v : e.table.data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error("field '" + path + ".table': entries must lie in [0,1]");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace potlab
