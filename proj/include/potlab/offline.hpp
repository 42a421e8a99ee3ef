#ifndef POTLAB_OFFLINE_HPP_
#define POTLAB_OFFLINE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "potlab/game.hpp"
#include "potlab/io.hpp"

namespace potlab {

// mu(a|x) per context; with the game's rho it defines mu(x,a).
struct BehaviorDistribution {
  std::string descriptor;
  JointTable table;
};

struct Sample {
  int context = 0;
  int joint = 0;
  std::vector<double> rewards;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string behavior_descriptor;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

BehaviorDistribution uniform_mixture_behavior(const Game& game,
                                              const ProductPolicy& ref,
                                              double mix);

// n i.i.d. draws x ~ rho, a ~ mu(.|x). With noise_sigma > 0 each recorded
// reward is r + U[-sigma, sigma] clipped to [0, 1]; otherwise r exactly.
Dataset sample_dataset(const Game& game, const BehaviorDistribution& mu,
                       int n, std::uint64_t seed, double noise_sigma = 0.0);

struct CoverageWitness {
  int player = -1;
  int context = -1;
  int joint = -1;
};

// Exact C_uni, or covered = false with the (i, x, a) that has reference
// deviation mass but no behavior mass.
struct CoverageResult {
  bool covered = true;
  double c_uni = 0.0;  // +infinity when not covered
  CoverageWitness witness;  // argmax when covered, support hole otherwise
};

CoverageResult coverage_coefficient(const Game& game,
                                    const BehaviorDistribution& mu,
                                    const ProductPolicy& ref);

double shift_coefficient(double eta, int num_players);

struct GibbsRatioReport {
  double max_ratio = 0.0;
  double bound = 0.0;  // e^eta
  bool pass = true;
};

inline constexpr double kGibbsRatioTol = 1e-9;

GibbsRatioReport check_gibbs_ratio(const ProductPolicy& pi,
                                   const ProductPolicy& ref, double eta);

// JSON Lines: a header {"n", "seed", "behavior", "noise_sigma"} followed by
// one {"x": context id, "a": [...], "r": [...]} per sample.
std::string dataset_to_jsonl(const Dataset& data, const Game& game);
Dataset dataset_from_jsonl(const std::string& text, const Game& game);
void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   const Game& game);
Dataset read_dataset(const std::filesystem::path& path, const Game& game);

Json coverage_to_json(const CoverageResult& c);

}  // namespace potlab

#endif  // POTLAB_OFFLINE_HPP_
