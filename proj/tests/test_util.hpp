#ifndef POTLAB_TESTS_TEST_UTIL_HPP_
#define POTLAB_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "potlab/game.hpp"

namespace potlab::testing {

// One context, one player, rewards r over the actions.
inline Game single_player_game(std::vector<double> r) {
  const int a = static_cast<int>(r.size());
  JointTable t(1, a);
  for (int k = 0; k < a; ++k) t(0, k) = r[k];
  return Game({"x0"}, {1.0}, {a}, {t});
}

// One context, two players with 2x2 tables r[a1][a2].
inline Game two_by_two(const double (&r1)[2][2], const double (&r2)[2][2]) {
  JointTable t1(1, 4), t2(1, 4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      t1(0, 2 * a + b) = r1[a][b];
      t2(0, 2 * a + b) = r2[a][b];
    }
  }
  return Game({"x0"}, {1.0}, {2, 2}, {t1, t2});
}

inline PlayerTable row_table(std::vector<double> v) {
  PlayerTable t(1, static_cast<int>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) t(0, static_cast<int>(k)) = v[k];
  return t;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("potlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace potlab::testing

#endif  // POTLAB_TESTS_TEST_UTIL_HPP_
