#ifndef POTLAB_RNG_HPP_
#define POTLAB_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace potlab {

// Child seed for (root, purpose tag, index). The tag is hashed with 64-bit
// FNV-1a and the three words are folded through splitmix64 finalizers, so
// distinct tags or indices give unrelated streams.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::uint64_t index);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 14695981039346656037ULL);

// Deterministic random source. Uses mt19937_64 (whose output sequence the
// standard fixes) with its own conversions, since the std distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::int64_t below(std::int64_t n);
  // Index drawn from an unnormalized nonnegative weight vector.
  int categorical(std::span<const double> weights);
  // Flat Dirichlet draw written into out.
  void dirichlet(std::span<double> out);

 private:
  std::mt19937_64 engine_;
};

}  // namespace potlab

#endif  // POTLAB_RNG_HPP_
