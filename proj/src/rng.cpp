#include "potlab/rng.hpp"

#include <cmath>

#include "potlab/error.hpp"

namespace potlab {
namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t k = 0; k < size; ++k) {
    h ^= bytes[k];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  return fnv1a64(bytes.data(), bytes.size());
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::uint64_t index) {
  std::uint64_t h = mix64(root);
  h = mix64(h ^ fnv1a64(tag));
  h = mix64(h ^ index);
  return h;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::below(std::int64_t n) {
  if (n <= 0) throw Error("Rng::below requires n > 0");
  // Rejection sampling keeps the draw exactly uniform.
  const auto un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % un);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::int64_t>(v % un);
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("categorical weights must have positive sum");
  const double u = uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = static_cast<int>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

void Rng::dirichlet(std::span<double> out) {
  double total = 0.0;
  for (double& v : out) {
    v = -std::log1p(-uniform());
    total += v;
  }
  for (double& v : out) v /= total;
}

}  // namespace potlab
