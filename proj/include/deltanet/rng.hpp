#pragma once

#include <cstdint>
#include <random>

namespace deltanet {

/// Deterministic generator used for every random decision in the project.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Floating-point draws are derived from raw 64-bit words here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined:
///   uniform()  = (word >> 11) * 2^-53            in [0, 1)
///   normal()   = Box-Muller on two uniform draws (one value per call)
///   below(n)   = rejection sampling on the top bits
///
/// Independent streams are keyed off one master seed with
/// derive(seed, stream) = splitmix64(seed + stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double normal();
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

/// Stream identifiers for Rng::derive.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kTrainForward = 3;
/// Eval FMP draw for layer `l` in averaging pass `p` uses kEvalFmp + p*4096 + l.
inline constexpr std::uint64_t kEvalFmp = 1 << 20;
}  // namespace streams

}  // namespace deltanet
