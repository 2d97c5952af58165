#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace retina {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Matrix2 = Eigen::Matrix2d;

/// Straight track from the origin. The direction is
/// (sin theta, cos theta sin phi, cos theta cos phi).
struct TrackParams {
  double theta = 0.0;
  double phi = 0.0;

  Vector2 as_vector() const { return {theta, phi}; }
  static TrackParams from_vector(const Vector2& v) { return {v[0], v[1]}; }

  /// theta in [-pi/2, pi/2] and phi in (-pi, pi].
  bool is_valid() const;
  /// Positive z component, i.e. the track reaches layers at z > 0.
  bool is_forward() const;
};

/// Annular layers perpendicular to the z axis.
struct DetectorGeometry {
  std::vector<double> layer_z;  // mm, strictly increasing, > 0
  double r_inner = 0.0;         // mm
  double r_outer = 0.0;         // mm

  std::size_t n_layers() const { return layer_z.size(); }

  /// `n` layers at z = (k+1) * length / n for k = 0..n-1.
  static DetectorGeometry equally_spaced(std::size_t n, double length,
                                         double r_inner, double r_outer);

  bool contains_radius(double r) const { return r >= r_inner && r <= r_outer; }

  /// Throws ConfigError on a violated invariant.
  void validate() const;

  bool operator==(const DetectorGeometry&) const = default;
};

/// Measured coordinates of a triggered pixel. This is everything the
/// reconstruction is allowed to see.
struct SpacePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  int layer = 0;

  bool operator==(const SpacePoint&) const = default;
};

/// A space point together with its simulation truth. An empty `track_id`
/// marks a noise hit.
struct Hit {
  SpacePoint point;
  std::optional<int> track_id;

  bool is_noise() const { return !track_id.has_value(); }
  bool operator==(const Hit&) const = default;
};

/// Line of the two-dimensional toy model: x = offset + y * tan(angle).
struct Line2D {
  double angle = 0.0;  // radians to the plane normal, in (-pi/2, pi/2)
  double offset = 0.0;

  Vector2 as_vector() const { return {angle, offset}; }
  static Line2D from_vector(const Vector2& v) { return {v[0], v[1]}; }
};

/// Hit of the toy model: x is measured in the detector plane at height y.
struct PlanarHit {
  double x = 0.0;
  double y = 0.0;
  int plane = 0;

  bool operator==(const PlanarHit&) const = default;
};

/// Polar angle for a pseudo-rapidity, 2 atan(exp(-eta)).
double eta_to_polar(double eta);

/// Inverse of eta_to_polar.
double polar_to_eta(double polar);

/// Throws InvalidInput unless `d` is unit-norm (1e-9) and has d_z > 0.
TrackParams direction_to_params(const Vector3& d);

Vector3 params_to_direction(const TrackParams& p);

/// Unit direction for a polar angle from the z axis and an azimuth about it.
Vector3 polar_azimuth_direction(double polar, double azimuth);

/// Point where the track crosses the plane z = layer_z.
/// Throws NoIntersection when the track is not forward-going.
Vector2 intersect_layer(const TrackParams& p, double layer_z);

/// Euclidean distance in the hit's layer between the hit and the track.
double hit_track_distance(const SpacePoint& hit, const TrackParams& p);

/// |x - (offset + y tan(angle))|, the distance within the hit's plane.
double line2d_distance(const PlanarHit& hit, const Line2D& line);

/// Angle between the direction vectors of two tracks.
double angular_separation(const TrackParams& a, const TrackParams& b);

/// Wraps phi into (-pi, pi] and clamps theta into [-pi/2, pi/2].
TrackParams normalized(TrackParams p);

}  // namespace retina
