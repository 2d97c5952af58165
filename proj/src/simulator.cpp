#include "retina/simulator.hpp"

#include "retina/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace retina {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Particle {
  TrackParams params;
  std::vector<Hit> hits;
};

Particle simulate_particle(const SimConfig& config, int index) {
  RandomStream rng = RandomStream::derive(
      config.rng_seed, {kTrackStream, static_cast<std::uint64_t>(index)});
  Particle particle;
  particle.params = sample_physical_track(config.eta_min, config.eta_max, rng);

  const auto& layers = config.geometry.layer_z;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const double u = rng.uniform();
    const double ex = rng.normal(0.0, config.smear_sigma);
    const double ey = rng.normal(0.0, config.smear_sigma);
    const Vector2 at = intersect_layer(particle.params, layers[k]);
    if (!config.geometry.contains_radius(at.norm()) || !(u < config.p_hit)) {
      continue;
    }
    particle.hits.push_back(
        {{at.x() + ex, at.y() + ey, layers[k], static_cast<int>(k)}, index});
  }
  return particle;
}

}  // namespace

void SimConfig::validate() const {
  geometry.validate();
  if (n_tracks < 0) {
    throw ConfigError("n_tracks must be non-negative");
  }
  if (!(eta_min < eta_max) || !std::isfinite(eta_min) ||
      !std::isfinite(eta_max)) {
    throw ConfigError("eta range must satisfy eta_min < eta_max");
  }
  if (!(p_hit >= 0.0 && p_hit <= 1.0)) {
    throw ConfigError("p_hit must lie in [0, 1]");
  }
  if (n_min < 0) {
    throw ConfigError("n_min must be non-negative");
  }
  if (!(smear_sigma > 0.0) || !std::isfinite(smear_sigma)) {
    throw ConfigError("smear_sigma must be positive");
  }
  if (!(noise_mean >= 0.0) || !std::isfinite(noise_mean)) {
    throw ConfigError("noise_mean must be non-negative");
  }
}

std::vector<SpacePoint> Event::points() const {
  std::vector<SpacePoint> out;
  out.reserve(hits.size());
  for (const Hit& h : hits) {
    out.push_back(h.point);
  }
  return out;
}

std::vector<int> Event::reconstructible_ids() const {
  std::vector<int> ids;
  ids.reserve(true_tracks.size());
  for (const TrueTrack& t : true_tracks) {
    ids.push_back(t.id);
  }
  return ids;
}

std::size_t Event::noise_count() const {
  std::size_t n = 0;
  for (const Hit& h : hits) {
    n += h.is_noise() ? 1 : 0;
  }
  return n;
}

TrackParams sample_physical_track(double eta_min, double eta_max,
                                  RandomStream& rng) {
  const double eta = rng.uniform(eta_min, eta_max);
  const double azimuth = rng.uniform(0.0, kTwoPi);
  return direction_to_params(
      polar_azimuth_direction(eta_to_polar(eta), azimuth));
}

Hit sample_noise_hit(const DetectorGeometry& geometry, RandomStream& rng) {
  const auto layer = static_cast<int>(rng.below(geometry.n_layers()));
  const double ri2 = geometry.r_inner * geometry.r_inner;
  const double ro2 = geometry.r_outer * geometry.r_outer;
  const double r = std::sqrt(rng.uniform() * (ro2 - ri2) + ri2);
  const double psi = rng.uniform(0.0, kTwoPi);
  return {{r * std::cos(psi), r * std::sin(psi),
           geometry.layer_z[static_cast<std::size_t>(layer)], layer},
          std::nullopt};
}

Event generate_event(const SimConfig& config) {
  config.validate();
  Event event;
  event.config = config;

  // A particle with p_hit = 0 can never become reconstructible; cap the
  // number of attempts in kReconstructible mode so the loop terminates.
  const long max_particles =
      config.count_mode == TrackCount::kGenerated
          ? config.n_tracks
          : 1000L * static_cast<long>(config.n_tracks) + 1000L;

  int reconstructible = 0;
  for (long i = 0; i < max_particles; ++i) {
    if (config.count_mode == TrackCount::kReconstructible &&
        reconstructible == config.n_tracks) {
      break;
    }
    Particle particle = simulate_particle(config, static_cast<int>(i));
    const auto n_hits = static_cast<int>(particle.hits.size());
    const bool detectable = n_hits >= config.n_min && n_hits > 0;
    if (detectable) {
      ++reconstructible;
      event.true_tracks.push_back(
          {static_cast<int>(i), particle.params, n_hits});
    } else {
      for (Hit& h : particle.hits) {
        h.track_id.reset();
      }
    }
    event.hits.insert(event.hits.end(), particle.hits.begin(),
                      particle.hits.end());
  }
  if (config.count_mode == TrackCount::kReconstructible &&
      reconstructible < config.n_tracks) {
    throw ConfigError("could not generate " + std::to_string(config.n_tracks) +
                      " reconstructible tracks with this configuration");
  }

  RandomStream noise = RandomStream::derive(config.rng_seed, {kNoiseStream});
  const std::uint64_t n_noise = noise.poisson(config.noise_mean);
  for (std::uint64_t i = 0; i < n_noise; ++i) {
    event.hits.push_back(sample_noise_hit(config.geometry, noise));
  }
  return event;
}

}  // namespace retina
