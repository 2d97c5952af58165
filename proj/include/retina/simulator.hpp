#pragma once

#include "retina/geometry.hpp"
#include "retina/random.hpp"

#include <cstdint>
#include <vector>

namespace retina {

/// How SimConfig::n_tracks is interpreted.
enum class TrackCount {
  /// Exactly n_tracks particles are generated; fewer may be reconstructible.
  kGenerated,
  /// Particles are generated until n_tracks of them are reconstructible.
  kReconstructible,
};

/// Parameters of the simplified VELO event model.
struct SimConfig {
  int n_tracks = 0;
  TrackCount count_mode = TrackCount::kGenerated;
  DetectorGeometry geometry;
  double eta_min = 0.0;
  double eta_max = 0.0;
  double p_hit = 0.0;
  int n_min = 0;
  double smear_sigma = 0.0;  // mm, standard deviation in x and in y
  double noise_mean = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct TrueTrack {
  int id = 0;
  TrackParams params;
  int n_hits = 0;

  bool operator==(const TrueTrack& o) const {
    return id == o.id && params.theta == o.params.theta &&
           params.phi == o.params.phi && n_hits == o.n_hits;
  }
};

/// One simulated bunch crossing.
///
/// `true_tracks` holds exactly the reconstructible tracks. Hits of particles
/// that left fewer than `n_min` hits are kept and labelled as noise.
struct Event {
  std::vector<Hit> hits;
  std::vector<TrueTrack> true_tracks;
  SimConfig config;

  /// Measurements only, in hit order.
  std::vector<SpacePoint> points() const;
  std::vector<int> reconstructible_ids() const;
  std::size_t noise_count() const;

  bool operator==(const Event&) const = default;
};

/// Deterministic function of `config` (including its rng_seed).
///
/// Particle i draws from the stream {kTrackStream, i}: eta, azimuth, then
/// per layer a hit decision and two smearing variates. Noise draws from
/// {kNoiseStream}: the Poisson count, then layer, radius and angle per hit.
Event generate_event(const SimConfig& config);

/// Uniform over layers and uniform by area over the layer annulus.
Hit sample_noise_hit(const DetectorGeometry& geometry, RandomStream& rng);

/// Direction of a particle drawn from the physical prior: eta uniform in
/// [eta_min, eta_max], azimuth about the beam uniform in [0, 2 pi).
TrackParams sample_physical_track(double eta_min, double eta_max,
                                  RandomStream& rng);

}  // namespace retina
