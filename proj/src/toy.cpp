#include "retina/toy.hpp"

#include <algorithm>
#include <cmath>

#include "retina/errors.hpp"
#include "retina/random.hpp"

namespace retina {

void ToyConfig::validate() const {
  if (n_planes < 1 || !(plane_spacing > 0.0)) {
    throw ConfigError("toy: need at least one plane and positive spacing");
  }
  if (!(smear_sigma >= 0.0) || noise_hits < 0) {
    throw ConfigError("toy: smear and noise count must be non-negative");
  }
  if (noise_hits > 0 && !(noise_x.hi > noise_x.lo)) {
    throw ConfigError("toy: noise x range is degenerate");
  }
  for (const Line2D& l : tracks) {
    if (!(std::abs(l.angle) < M_PI / 2)) {
      throw ConfigError("toy: track angle must lie in (-pi/2, pi/2)");
    }
  }
}

bool ToyConfig::operator==(const ToyConfig& o) const {
  if (tracks.size() != o.tracks.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].angle != o.tracks[i].angle ||
        tracks[i].offset != o.tracks[i].offset) {
      return false;
    }
  }
  return n_planes == o.n_planes && first_plane_y == o.first_plane_y &&
         plane_spacing == o.plane_spacing &&
         smear_sigma == o.smear_sigma && noise_hits == o.noise_hits &&
         noise_x.lo == o.noise_x.lo && noise_x.hi == o.noise_x.hi &&
         rng_seed == o.rng_seed;
}

std::vector<PlanarHit> ToyEvent::points() const {
  std::vector<PlanarHit> out;
  out.reserve(hits.size());
  for (const ToyHit& h : hits) {
    out.push_back(h.point);
  }
  return out;
}

ToyEvent generate_toy_event(const ToyConfig& config) {
  config.validate();
  ToyEvent event;
  event.config = config;
  for (std::size_t i = 0; i < config.tracks.size(); ++i) {
    RandomStream rng = RandomStream::derive(config.rng_seed, {kToyStream, i});
    const Line2D& line = config.tracks[i];
    const int id = static_cast<int>(i);
    for (int k = 0; k < config.n_planes; ++k) {
      const double y = config.plane_y(k);
      const double err =
          config.smear_sigma > 0.0 ? rng.normal(0.0, config.smear_sigma) : 0.0;
      event.hits.push_back(
          {{line.offset + y * std::tan(line.angle) + err, y, k}, id});
    }
    event.tracks.push_back({id, line, config.n_planes});
  }
  RandomStream noise = RandomStream::derive(config.rng_seed, {kNoiseStream});
  for (int n = 0; n < config.noise_hits; ++n) {
    const auto k = static_cast<int>(
        noise.below(static_cast<std::uint64_t>(config.n_planes)));
    const double x = noise.uniform(config.noise_x.lo, config.noise_x.hi);
    event.hits.push_back({{x, config.plane_y(k), k}, std::nullopt});
  }
  return event;
}

ToyFixture fig1_fixture(std::uint64_t seed) {
  ToyFixture f;
  f.name = "fig1";
  f.config.n_planes = 10;
  f.config.first_plane_y = -0.45;
  f.config.plane_spacing = 0.1;
  f.config.tracks = {{0.3, 0.2}, {-0.25, 0.75}};
  f.config.noise_hits = 20;
  f.config.noise_x = {0.0, 1.0};
  f.config.rng_seed = seed;
  f.grid = ParamGrid::with_step({-0.6, 0.6}, {0.0, 1.0}, 0.01);
  f.sigma = 2e-2;
  // Ten aligned hits against at most about six from chance alignments.
  f.relative_threshold = 0.7;
  return f;
}

ToyFixture fig2_fixture(double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) {
    throw InvalidInput("fig2: sigma must be positive");
  }
  ToyFixture f;
  f.name = "fig2";
  // Planes centred on y = 0 so angle and offset decouple.
  f.config.n_planes = 100;
  f.config.plane_spacing = 0.01;
  f.config.first_plane_y = -0.495;
  f.config.tracks = {{0.0, 0.44}, {0.0, 0.56}};
  f.config.smear_sigma = 1e-2;
  f.config.rng_seed = seed;
  // Offset step follows sigma; angle resolution is ~4x coarser over a unit
  // lever arm.
  const double step = std::clamp(0.5 * sigma, 1e-3, 1e-2);
  f.grid = ParamGrid::with_steps({-0.2, 0.2}, {0.3, 0.7}, 4.0 * step, step);
  f.sigma = sigma;
  f.relative_threshold = 0.5;
  return f;
}

}  // namespace retina
