#pragma once

#include "retina/geometry.hpp"
#include "retina/random.hpp"
#include "retina/simulator.hpp"

#include <cstdint>
#include <vector>

namespace retina::testing {

/// The standard simplified VELO: 20 layers over 700 mm, radii 8 to 42 mm.
inline SimConfig velo_config(int n_tracks, std::uint64_t seed) {
  SimConfig c;
  c.n_tracks = n_tracks;
  c.geometry = DetectorGeometry::equally_spaced(20, 700.0, 8.0, 42.0);
  c.eta_min = 1.0;
  c.eta_max = 6.0;
  c.p_hit = 0.5;
  c.n_min = 2;
  c.smear_sigma = 0.01;
  c.noise_mean = 250.0;
  c.rng_seed = seed;
  return c;
}

/// Hits of a single track on every layer, smeared by `smear` mm.
inline std::vector<SpacePoint> track_points(const TrackParams& p,
                                            const DetectorGeometry& g,
                                            double smear, RandomStream& rng) {
  std::vector<SpacePoint> out;
  for (std::size_t k = 0; k < g.n_layers(); ++k) {
    const Vector2 at = intersect_layer(p, g.layer_z[k]);
    out.push_back({at[0] + rng.normal(0.0, smear), at[1] + rng.normal(0.0, smear),
                   g.layer_z[k], static_cast<int>(k)});
  }
  return out;
}

}  // namespace retina::testing
