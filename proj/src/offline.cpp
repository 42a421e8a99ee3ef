#include "potlab/offline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "potlab/error.hpp"
#include "potlab/rng.hpp"

namespace potlab {

BehaviorDistribution uniform_mixture_behavior(const Game& game,
                                              const ProductPolicy& ref,
                                              double mix) {
  if (!(mix >= 0.0 && mix <= 1.0)) throw Error("mix must lie in [0, 1]");
  ref.check_shape(game);
  const auto& space = game.space();
  const double uniform = 1.0 / space.num_joint();
  BehaviorDistribution mu;
  std::ostringstream name;
  name << "uniform_mixture(mix=" << mix << ")";
  mu.descriptor = name.str();
  mu.table = JointTable(game.num_contexts(), space.num_joint());
  for (int x = 0; x < game.num_contexts(); ++x) {
    for (int j = 0; j < space.num_joint(); ++j) {
      double prod = 1.0;
      for (int i = 0; i < space.num_players(); ++i) {
        prod *= ref.at(i, x)[space.action(j, i)];
      }
      mu.table(x, j) = mix * uniform + (1.0 - mix) * prod;
    }
  }
  return mu;
}

namespace {

void check_behavior(const Game& game, const BehaviorDistribution& mu) {
  if (mu.table.rows() != game.num_contexts() ||
      mu.table.cols() != game.space().num_joint()) {
    throw Error("behavior distribution shape mismatch");
  }
  for (int x = 0; x < game.num_contexts(); ++x) {
    check_distribution(mu.table.row(x), "behavior distribution");
  }
}

}  // namespace

Dataset sample_dataset(const Game& game, const BehaviorDistribution& mu, int n,
                       std::uint64_t seed, double noise_sigma) {
  if (n < 1) throw Error("sample_dataset: n must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
  check_behavior(game, mu);
  Rng rng(seed);
  Dataset data;
  data.behavior_descriptor = mu.descriptor;
  data.seed = seed;
  data.noise_sigma = noise_sigma;
  data.samples.reserve(n);
  const int m = game.num_players();
  for (int s = 0; s < n; ++s) {
    Sample sample;
    sample.context = rng.categorical(game.context_dist());
    sample.joint = rng.categorical(mu.table.row(sample.context));
    sample.rewards.resize(m);
    for (int i = 0; i < m; ++i) {
      double r = game.reward(i)(sample.context, sample.joint);
      if (noise_sigma > 0.0) {
        r = std::clamp(r + rng.uniform(-noise_sigma, noise_sigma), 0.0, 1.0);
      }
      sample.rewards[i] = r;
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

CoverageResult coverage_coefficient(const Game& game,
                                    const BehaviorDistribution& mu,
                                    const ProductPolicy& ref) {
  check_behavior(game, mu);
  ref.check_shape(game);
  const auto& space = game.space();
  CoverageResult result;
  for (int i = 0; i < game.num_players(); ++i) {
    for (int x = 0; x < game.num_contexts(); ++x) {
      if (game.context_dist()[x] <= 0.0) continue;
      for (int j = 0; j < space.num_joint(); ++j) {
        double opp = 1.0;
        for (int k = 0; k < space.num_players(); ++k) {
          if (k != i) opp *= ref.at(k, x)[space.action(j, k)];
        }
        if (opp <= 0.0) continue;
        // rho(x) cancels against mu(x, a) = rho(x) mu(a|x).
        const double m = mu.table(x, j);
        if (m <= 0.0) {
          result.covered = false;
          result.c_uni = std::numeric_limits<double>::infinity();
          result.witness = {i, x, j};
          return result;
        }
        const double ratio = opp / m;
        if (ratio > result.c_uni) {
          result.c_uni = ratio;
          result.witness = {i, x, j};
        }
      }
    }
  }
  return result;
}

double shift_coefficient(double eta, int num_players) {
  if (!(eta > 0.0)) throw Error("shift_coefficient: eta must be > 0");
  if (num_players < 1) throw Error("shift_coefficient: m must be >= 1");
  return std::exp(eta * (num_players - 1));
}

GibbsRatioReport check_gibbs_ratio(const ProductPolicy& pi,
                                   const ProductPolicy& ref, double eta) {
  if (pi.num_players() != ref.num_players() ||
      pi.num_contexts() != ref.num_contexts()) {
    throw Error("check_gibbs_ratio: shape mismatch");
  }
  GibbsRatioReport report;
  report.bound = std::exp(eta);
  for (int i = 0; i < pi.num_players(); ++i) {
    for (int x = 0; x < pi.num_contexts(); ++x) {
      const auto p = pi.at(i, x);
      const auto q = ref.at(i, x);
      for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] <= 0.0) continue;
        const double ratio = q[a] > 0.0
                                 ? p[a] / q[a]
                                 : std::numeric_limits<double>::infinity();
        report.max_ratio = std::max(report.max_ratio, ratio);
      }
    }
  }
  report.pass = report.max_ratio <= report.bound + kGibbsRatioTol;
  return report;
}

std::string dataset_to_jsonl(const Dataset& data, const Game& game) {
  std::ostringstream out;
  Json header;
  header["n"] = data.samples.size();
  header["seed"] = data.seed;
  header["behavior"] = data.behavior_descriptor;
  header["noise_sigma"] = data.noise_sigma;
  out << header.dump() << "\n";
  for (const auto& s : data.samples) {
    Json line;
    line["x"] = game.contexts()[s.context];
    const auto acts = game.space().actions(s.joint);
    line["a"] = std::vector<int>(acts.begin(), acts.end());
    line["r"] = s.rewards;
    out << line.dump() << "\n";
  }
  return out.str();
}

Dataset dataset_from_jsonl(const std::string& text, const Game& game) {
  std::istringstream in(text);
  std::string line;
  Dataset data;
  long long expected = -1;
  int line_no = 0;
  auto parse = [&](const std::string& s) {
    try {
      return Json::parse(s);
    } catch (const Json::parse_error& e) {
      throw Error("dataset line " + std::to_string(line_no) +
                  ": malformed JSON");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse(line);
    if (expected < 0) {
      expected = json_integer(require_field(j, "n", "header"), "header.n");
      data.seed = static_cast<std::uint64_t>(
          require_field(j, "seed", "header").get<std::uint64_t>());
      data.behavior_descriptor =
          json_string(require_field(j, "behavior", "header"),
                      "header.behavior");
      if (j.contains("noise_sigma")) {
        data.noise_sigma = json_number(j["noise_sigma"], "header.noise_sigma");
      }
      continue;
    }
    const std::string where = "dataset line " + std::to_string(line_no);
    Sample s;
    s.context = game.context_index(json_string(require_field(j, "x", where),
                                               where + ".x"));
    const Json& a = require_field(j, "a", where);
    if (!a.is_array()) throw Error(where + ": 'a' must be an array");
    std::vector<int> acts;
    for (const auto& v : a) {
      acts.push_back(static_cast<int>(json_integer(v, where + ".a")));
    }
    s.joint = game.space().index(acts);
    const Json& r = require_field(j, "r", where);
    if (!r.is_array() || static_cast<int>(r.size()) != game.num_players()) {
      throw Error(where + ": 'r' must have one reward per player");
    }
    for (const auto& v : r) {
      const double rv = json_number(v, where + ".r");
      if (!(rv >= 0.0 && rv <= 1.0)) throw Error(where + ": reward outside [0,1]");
      s.rewards.push_back(rv);
    }
    data.samples.push_back(std::move(s));
  }
  if (expected < 0) throw Error("dataset: missing header line");
  if (static_cast<long long>(data.samples.size()) != expected) {
    throw Error("dataset: header n does not match sample count");
  }
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   const Game& game) {
  write_text_file(path, dataset_to_jsonl(data, game));
}

Dataset read_dataset(const std::filesystem::path& path, const Game& game) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_jsonl(buf.str(), game);
}

Json coverage_to_json(const CoverageResult& c) {
  Json j;
  j["covered"] = c.covered;
  j["C_uni"] = c.covered ? Json(c.c_uni) : Json("inf");
  j["witness"] = {{"player", c.witness.player},
                  {"context", c.witness.context},
                  {"joint", c.witness.joint}};
  return j;
}

}  // namespace potlab
