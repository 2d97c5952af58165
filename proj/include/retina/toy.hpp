#pragma once

#include "retina/geometry.hpp"
#include "retina/grid_retina.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace retina {

/// Two-dimensional toy detector: `n_planes` planes at
/// y = first_plane_y + k * plane_spacing, hits measured in x.
struct ToyConfig {
  int n_planes = 0;
  double first_plane_y = 0.0;
  double plane_spacing = 0.0;
  std::vector<Line2D> tracks;
  /// Gaussian error on x of track hits; zero for exact hits.
  double smear_sigma = 0.0;
  /// Noise hits, each on a uniformly chosen plane, x uniform in noise_x.
  int noise_hits = 0;
  Interval noise_x;
  std::uint64_t rng_seed = 0;

  double plane_y(int k) const { return first_plane_y + k * plane_spacing; }
  void validate() const;

  bool operator==(const ToyConfig& o) const;
};

struct ToyHit {
  PlanarHit point;
  std::optional<int> track_id;

  bool operator==(const ToyHit&) const = default;
};

struct ToyTrack {
  int id = 0;
  Line2D line;
  int n_hits = 0;

  bool operator==(const ToyTrack& o) const {
    return id == o.id && line.angle == o.line.angle &&
           line.offset == o.line.offset && n_hits == o.n_hits;
  }
};

struct ToyEvent {
  std::vector<ToyHit> hits;
  std::vector<ToyTrack> tracks;
  ToyConfig config;

  std::vector<PlanarHit> points() const;

  bool operator==(const ToyEvent&) const = default;
};

/// Every track leaves one hit per plane. Track i draws its smearing from
/// {kToyStream, i}; noise draws from {kNoiseStream}.
ToyEvent generate_toy_event(const ToyConfig& config);

/// A scripted toy scene: event, the lattice to scan, bandwidth and the
/// peak threshold, expressed as a fraction of the largest grid response.
struct ToyFixture {
  std::string name;
  ToyConfig config;
  ParamGrid grid;
  double sigma = 0.0;
  double relative_threshold = 0.0;
};

/// Two tracks with 10 exact hits each plus 20 uniform noise hits on 10
/// planes centred on y = 0, sigma = 2e-2, scanned with a 0.01 lattice.
ToyFixture fig1_fixture(std::uint64_t seed);

/// Two parallel tracks 0.12 apart crossing 100 planes, x errors of standard
/// deviation 1e-2. The lattice step shrinks with `sigma` (1e-3, 1e-2 and 1e-1
/// are the usual choices).
ToyFixture fig2_fixture(double sigma, std::uint64_t seed);

}  // namespace retina
