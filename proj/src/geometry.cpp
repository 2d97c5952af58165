#include "retina/geometry.hpp"

#include "retina/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace retina {

namespace {
constexpr double kPi = std::numbers::pi;
}

bool TrackParams::is_valid() const {
  return std::isfinite(theta) && std::isfinite(phi) && theta >= -kPi / 2 &&
         theta <= kPi / 2 && phi > -kPi && phi <= kPi;
}

bool TrackParams::is_forward() const {
  return std::cos(theta) * std::cos(phi) > 0.0;
}

DetectorGeometry DetectorGeometry::equally_spaced(std::size_t n, double length,
                                                  double r_inner,
                                                  double r_outer) {
  DetectorGeometry g;
  g.layer_z.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.layer_z.push_back(static_cast<double>(k + 1) * length /
                        static_cast<double>(n));
  }
  g.r_inner = r_inner;
  g.r_outer = r_outer;
  g.validate();
  return g;
}

void DetectorGeometry::validate() const {
  if (layer_z.empty()) {
    throw ConfigError("geometry: at least one layer is required");
  }
  for (std::size_t k = 0; k < layer_z.size(); ++k) {
    if (!(layer_z[k] > 0.0) || !std::isfinite(layer_z[k])) {
      throw ConfigError("geometry: layer_z[" + std::to_string(k) +
                        "] must be positive");
    }
    if (k > 0 && !(layer_z[k] > layer_z[k - 1])) {
      throw ConfigError("geometry: layer_z must be strictly increasing");
    }
  }
  if (!(r_inner >= 0.0) || !(r_outer > r_inner) || !std::isfinite(r_outer)) {
    throw ConfigError("geometry: require 0 <= r_inner < r_outer");
  }
}

double eta_to_polar(double eta) { return 2.0 * std::atan(std::exp(-eta)); }

double polar_to_eta(double polar) { return -std::log(std::tan(polar / 2.0)); }

TrackParams direction_to_params(const Vector3& d) {
  if (!d.allFinite() || std::abs(d.norm() - 1.0) > 1e-9) {
    throw InvalidInput("direction_to_params: direction is not unit-norm");
  }
  if (!(d.z() > 0.0)) {
    throw InvalidInput("direction_to_params: direction is not forward-going");
  }
  return {std::asin(d.x()), std::atan2(d.y(), d.z())};
}

Vector3 params_to_direction(const TrackParams& p) {
  const double ct = std::cos(p.theta);
  return {std::sin(p.theta), ct * std::sin(p.phi), ct * std::cos(p.phi)};
}

Vector3 polar_azimuth_direction(double polar, double azimuth) {
  const double sp = std::sin(polar);
  return {sp * std::cos(azimuth), sp * std::sin(azimuth), std::cos(polar)};
}

Vector2 intersect_layer(const TrackParams& p, double layer_z) {
  const double dz = std::cos(p.theta) * std::cos(p.phi);
  if (!(dz > 0.0)) {
    throw NoIntersection("intersect_layer: track is not forward-going");
  }
  const double t = layer_z / dz;
  return {t * std::sin(p.theta), t * std::cos(p.theta) * std::sin(p.phi)};
}

double hit_track_distance(const SpacePoint& hit, const TrackParams& p) {
  const Vector2 at = intersect_layer(p, hit.z);
  return std::hypot(hit.x - at.x(), hit.y - at.y());
}

double line2d_distance(const PlanarHit& hit, const Line2D& line) {
  return std::abs(hit.x - (line.offset + hit.y * std::tan(line.angle)));
}

double angular_separation(const TrackParams& a, const TrackParams& b) {
  const Vector3 da = params_to_direction(a);
  const Vector3 db = params_to_direction(b);
  return std::atan2(da.cross(db).norm(), da.dot(db));
}

TrackParams normalized(TrackParams p) {
  p.theta = std::clamp(p.theta, -kPi / 2, kPi / 2);
  p.phi = std::remainder(p.phi, 2.0 * kPi);
  if (p.phi <= -kPi) {
    p.phi += 2.0 * kPi;
  }
  return p;
}

}  // namespace retina
