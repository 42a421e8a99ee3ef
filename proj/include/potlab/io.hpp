#ifndef POTLAB_IO_HPP_
#define POTLAB_IO_HPP_

#include <filesystem>
#include <string>

#include <json.hpp>

#include "potlab/game.hpp"

namespace potlab {

using Json = nlohmann::json;

// Game schema: num_players, contexts, context_dist, action_counts,
// rewards[player][context][a_1]...[a_m], optional potential[context][a_1]...
// and declared_alpha.
Json game_to_json(const Game& game);
Game game_from_json(const Json& j);

// Policy schema: {"<player>": {"<context id>": [probs]}}.
Json policy_to_json(const ProductPolicy& pi, const Game& game);
ProductPolicy policy_from_json(const Json& j, const Game& game);

// Nested-array view of one context-by-joint table ([context][a_1]...[a_m]).
Json joint_table_to_json(const JointTable& t, const JointActionSpace& space);
JointTable joint_table_from_json(const Json& j, const JointActionSpace& space,
                                 int num_contexts, const std::string& field);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

// Field accessors that throw potlab::Error naming the offending field.
const Json& require_field(const Json& obj, const std::string& key,
                          const std::string& path);
double json_number(const Json& j, const std::string& path);
long long json_integer(const Json& j, const std::string& path);
std::string json_string(const Json& j, const std::string& path);

}  // namespace potlab

#endif  // POTLAB_IO_HPP_
