#include "potlab/io.hpp"

#include <fstream>
#include <sstream>

#include "potlab/error.hpp"

namespace potlab {

const Json& require_field(const Json& obj, const std::string& key,
                          const std::string& path) {
  if (!obj.is_object()) throw Error("field '" + path + "': expected object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error("missing field '" + (path.empty() ? key : path + "." + key) +
                "'");
  }
  return *it;
}

double json_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw Error("field '" + path + "': expected number");
  return j.get<double>();
}

long long json_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    throw Error("field '" + path + "': expected integer");
  }
  return j.get<long long>();
}

std::string json_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw Error("field '" + path + "': expected string");
  return j.get<std::string>();
}

namespace {

Json nest(std::span<const double> row, const JointActionSpace& space,
          int player, int offset) {
  Json arr = Json::array();
  for (int a = 0; a < space.count(player); ++a) {
    const int idx = offset + a * space.stride(player);
    if (player + 1 == space.num_players()) {
      arr.push_back(row[idx]);
    } else {
      arr.push_back(nest(row, space, player + 1, idx));
    }
  }
  return arr;
}

void unnest(const Json& j, const JointActionSpace& space, int player,
            int offset, std::span<double> row, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != space.count(player)) {
    throw Error("field '" + path + "': expected array of length " +
                std::to_string(space.count(player)));
  }
  for (int a = 0; a < space.count(player); ++a) {
    const int idx = offset + a * space.stride(player);
    const std::string sub = path + "[" + std::to_string(a) + "]";
    if (player + 1 == space.num_players()) {
      row[idx] = json_number(j[a], sub);
    } else {
      unnest(j[a], space, player + 1, idx, row, sub);
    }
  }
}

}  // namespace

Json joint_table_to_json(const JointTable& t, const JointActionSpace& space) {
  Json arr = Json::array();
  for (int x = 0; x < t.rows(); ++x) arr.push_back(nest(t.row(x), space, 0, 0));
  return arr;
}

JointTable joint_table_from_json(const Json& j, const JointActionSpace& space,
                                 int num_contexts, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != num_contexts) {
    throw Error("field '" + field + "': expected one entry per context");
  }
  JointTable t(num_contexts, space.num_joint());
  for (int x = 0; x < num_contexts; ++x) {
    unnest(j[x], space, 0, 0, t.row(x),
           field + "[" + std::to_string(x) + "]");
  }
  return t;
}

Json game_to_json(const Game& game) {
  Json j;
  j["num_players"] = game.num_players();
  j["contexts"] = game.contexts();
  j["context_dist"] = std::vector<double>(game.context_dist().begin(),
                                          game.context_dist().end());
  j["action_counts"] = game.space().counts();
  Json rewards = Json::array();
  for (int i = 0; i < game.num_players(); ++i) {
    rewards.push_back(joint_table_to_json(game.reward(i), game.space()));
  }
  j["rewards"] = std::move(rewards);
  if (game.potential()) {
    j["potential"] = joint_table_to_json(*game.potential(), game.space());
    j["declared_alpha"] = *game.declared_alpha();
  }
  return j;
}

Game game_from_json(const Json& j) {
  const long long m = json_integer(require_field(j, "num_players", ""),
                                   "num_players");
  const Json& ctx = require_field(j, "contexts", "");
  if (!ctx.is_array()) throw Error("field 'contexts': expected array");
  std::vector<std::string> contexts;
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    contexts.push_back(
        json_string(ctx[k], "contexts[" + std::to_string(k) + "]"));
  }
  const Json& dist = require_field(j, "context_dist", "");
  if (!dist.is_array()) throw Error("field 'context_dist': expected array");
  std::vector<double> rho;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    rho.push_back(
        json_number(dist[k], "context_dist[" + std::to_string(k) + "]"));
  }
  const Json& counts_j = require_field(j, "action_counts", "");
  if (!counts_j.is_array() || static_cast<long long>(counts_j.size()) != m) {
    throw Error("field 'action_counts': expected num_players integers");
  }
  std::vector<int> counts;
  for (std::size_t k = 0; k < counts_j.size(); ++k) {
    counts.push_back(static_cast<int>(json_integer(
        counts_j[k], "action_counts[" + std::to_string(k) + "]")));
  }
  const JointActionSpace space(counts);
  const Json& rewards_j = require_field(j, "rewards", "");
  if (!rewards_j.is_array() || static_cast<long long>(rewards_j.size()) != m) {
    throw Error("field 'rewards': expected one table per player");
  }
  std::vector<JointTable> rewards;
  for (long long i = 0; i < m; ++i) {
    rewards.push_back(joint_table_from_json(
        rewards_j[i], space, static_cast<int>(contexts.size()),
        "rewards[" + std::to_string(i) + "]"));
  }
  Game game(std::move(contexts), std::move(rho), counts, std::move(rewards));
  if (j.contains("potential")) {
    JointTable phi = joint_table_from_json(j["potential"], space,
                                           game.num_contexts(), "potential");
    const double alpha =
        json_number(require_field(j, "declared_alpha", ""), "declared_alpha");
    game.set_potential(std::move(phi), alpha);
  }
  return game;
}

Json policy_to_json(const ProductPolicy& pi, const Game& game) {
  pi.check_shape(game);
  Json j = Json::object();
  for (int i = 0; i < pi.num_players(); ++i) {
    Json per_context = Json::object();
    for (int x = 0; x < pi.num_contexts(); ++x) {
      const auto row = pi.at(i, x);
      per_context[game.contexts()[x]] =
          std::vector<double>(row.begin(), row.end());
    }
    j[std::to_string(i)] = std::move(per_context);
  }
  return j;
}

ProductPolicy policy_from_json(const Json& j, const Game& game) {
  if (!j.is_object()) throw Error("policy: expected object keyed by player");
  std::vector<PlayerTable> tables;
  for (int i = 0; i < game.num_players(); ++i) {
    const std::string key = std::to_string(i);
    const Json& per_context = require_field(j, key, "");
    PlayerTable t(game.num_contexts(), game.space().count(i));
    for (int x = 0; x < game.num_contexts(); ++x) {
      const std::string path = key + "." + game.contexts()[x];
      const Json& probs = require_field(per_context, game.contexts()[x], key);
      if (!probs.is_array() ||
          static_cast<int>(probs.size()) != game.space().count(i)) {
        throw Error("field '" + path + "': wrong number of probabilities");
      }
      for (int a = 0; a < game.space().count(i); ++a) {
        t(x, a) = json_number(probs[a], path);
      }
    }
    tables.push_back(std::move(t));
  }
  return ProductPolicy(std::move(tables));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace potlab
