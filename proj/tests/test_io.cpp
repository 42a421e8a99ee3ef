#include <gtest/gtest.h>

#include <fstream>

#include "potlab/diagnostics.hpp"
#include "potlab/error.hpp"
#include "potlab/game_zoo.hpp"
#include "potlab/io.hpp"
#include "test_util.hpp"

namespace potlab {
namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(GameJson, RoundTripKeepsPotential) {
  GameSpec s = perturbed_team_fixture_spec();
  s.num_players = 3;
  s.action_counts = {2, 3, 2};
  const Game g = make_game(s);
  const Game h = game_from_json(game_to_json(g));
  EXPECT_EQ(h.rewards(), g.rewards());
  EXPECT_EQ(h.contexts(), g.contexts());
  ASSERT_TRUE(h.potential().has_value());
  EXPECT_EQ(*h.potential(), *g.potential());
  EXPECT_EQ(*h.declared_alpha(), *g.declared_alpha());
}

TEST(GameJson, NestedLayoutIsPlayerZeroOutermost) {
  JointTable r(1, 6);
  for (int j = 0; j < 6; ++j) r(0, j) = j / 10.0;
  const Game g({"c"}, {1.0}, {2, 3}, {r, r});
  const Json j = game_to_json(g);
  // Joint index 1 * 3 + 2 is a_1 = 1, a_2 = 2.
  EXPECT_DOUBLE_EQ(j["rewards"][0][0][1][2].get<double>(), 0.5);
  EXPECT_FALSE(j.contains("potential"));
}

TEST(GameJson, ErrorsNameTheField) {
  const Json good = game_to_json(make_game(team_fixture_spec()));
  Json j = good;
  j.erase("rewards");
  EXPECT_NE(error_of([&] { game_from_json(j); }).find("rewards"), std::string::npos);
  j = good;
  j["num_players"] = "two";
  EXPECT_NE(error_of([&] { game_from_json(j); }).find("num_players"), std::string::npos);
  j = good;
  j["rewards"][1][0][0][0] = "x";
  EXPECT_NE(error_of([&] { game_from_json(j); }).find("rewards"), std::string::npos);
  j = good;
  j["context_dist"] = {0.5};
  EXPECT_FALSE(error_of([&] { game_from_json(j); }).empty());
}

TEST(PolicyJson, RoundTrip) {
  const Game g = make_game(team_fixture_spec());
  PlayerTable a(2, 2), b(2, 2);
  a(0, 0) = 0.2; a(0, 1) = 0.8; a(1, 0) = 0.6; a(1, 1) = 0.4;
  b(0, 0) = 0.9; b(0, 1) = 0.1; b(1, 0) = 0.3; b(1, 1) = 0.7;
  const ProductPolicy pi({a, b});
  EXPECT_EQ(policy_from_json(policy_to_json(pi, g), g), pi);
}

TEST(PolicyJson, WrongLengthNamesPath) {
  const Game g = make_game(team_fixture_spec());
  Json j = policy_to_json(ProductPolicy::uniform(g), g);
  j["1"]["x0"] = {1.0};
  const std::string msg = error_of([&] { policy_from_json(j, g); });
  EXPECT_NE(msg.find("1"), std::string::npos);
  EXPECT_NE(msg.find("x0"), std::string::npos);
}

TEST(JsonFile, MalformedFileIsError) {
  const auto dir = testing::scratch_dir("io");
  std::ofstream(dir / "bad.json") << "{\"a\": ";
  const std::string msg = error_of([&] { read_json_file(dir / "bad.json"); });
  EXPECT_NE(msg.find("malformed JSON"), std::string::npos);
  EXPECT_THROW(read_json_file(dir / "missing.json"), Error);
}

TEST(JsonFile, WriteCreatesParents) {
  const auto dir = testing::scratch_dir("io_write");
  write_json_file(dir / "a" / "b.json", Json{{"k", 1}});
  EXPECT_EQ(read_json_file(dir / "a" / "b.json")["k"], 1);
}

TEST(FieldAccessors, TypeErrors) {
  EXPECT_NE(error_of([] { json_number(Json("s"), "p.q"); }).find("p.q"), std::string::npos);
  EXPECT_THROW(json_integer(Json(1.5), "p"), Error);
  EXPECT_EQ(json_integer(Json(4), "p"), 4);
  EXPECT_THROW(json_string(Json(3), "p"), Error);
  EXPECT_NE(error_of([] { require_field(Json::object(), "k", "root"); }).find("root.k"),
            std::string::npos);
}

}  // namespace
}  // namespace potlab
