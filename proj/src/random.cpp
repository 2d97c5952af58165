#include "retina/random.hpp"

#include <cmath>
#include <numbers>

namespace retina {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base);
  for (const std::uint64_t step : path) {
    h = mix64(h ^ mix64(step + 0x632be59bd9b4e019ULL));
  }
  return h;
}

RandomStream RandomStream::derive(std::uint64_t base,
                                  std::initializer_list<std::uint64_t> path) {
  return RandomStream(derive_seed(base, path));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n <= 1) {
    return 0;
  }
  // rejection keeps the result unbiased
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t v = engine_();
  while (v >= limit) {
    v = engine_();
  }
  return v % n;
}

double RandomStream::normal(double mean, double sd) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::poisson(double mean) {
  std::uint64_t count = 0;
  double t = 0.0;
  while (true) {
    t -= std::log(1.0 - uniform());
    if (t > mean) {
      return count;
    }
    ++count;
  }
}

}  // namespace retina
