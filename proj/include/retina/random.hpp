#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace retina {

/// Seedable random stream with portable output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so the
/// variate transforms are implemented here. Independent streams are derived
/// from a base seed and a path of integers (e.g. {kTrackStream, track_index})
/// through SplitMix64 mixing, which makes every stream reproducible no matter
/// in which order the streams are consumed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t base,
                             std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Box-Muller; one uniform pair per variate.
  double normal(double mean, double sd);

  /// Counts unit-rate exponential arrivals before `mean`. Exact, O(mean).
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the stream `path` under `base`, as used by RandomStream::derive.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path);

/// Stream tags.
enum StreamTag : std::uint64_t {
  kTrackStream = 1,
  kNoiseStream = 2,
  kSeedStream = 3,
  kEventStream = 4,
  kToyStream = 5,
};

}  // namespace retina
