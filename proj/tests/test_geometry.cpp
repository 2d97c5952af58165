#include "retina/errors.hpp"
#include "retina/geometry.hpp"
#include "retina/random.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

using namespace retina;

namespace {

constexpr double kPi = std::numbers::pi;

Vector3 random_forward_direction(RandomStream& rng) {
  while (true) {
    Vector3 d{rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
    d.normalize();
    if (d.z() > 1e-3) {
      return d;
    }
  }
}

}  // namespace

TEST_CASE("eta to polar angle") {
  CHECK(eta_to_polar(0.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(std::abs(eta_to_polar(1.0) - 0.705026) < 1e-6);
  CHECK(std::abs(-std::log(std::tan(eta_to_polar(3.0) / 2.0)) - 3.0) < 1e-12);
  CHECK(std::abs(polar_to_eta(eta_to_polar(5.5)) - 5.5) < 1e-12);
}

TEST_CASE("direction to params") {
  const auto axial = direction_to_params({0.0, 0.0, 1.0});
  CHECK(axial.theta == 0.0);
  CHECK(axial.phi == 0.0);

  const auto tilt = direction_to_params({std::sin(0.1), 0.0, std::cos(0.1)});
  CHECK(std::abs(tilt.theta - 0.1) < 1e-15);
  CHECK(tilt.phi == 0.0);

  CHECK_THROWS_AS(direction_to_params({0.0, 0.0, 2.0}), InvalidInput);
  CHECK_THROWS_AS(direction_to_params({0.0, 0.6, -0.8}), InvalidInput);
  CHECK_THROWS_AS(direction_to_params({1.0, 0.0, 0.0}), InvalidInput);
}

TEST_CASE("params to direction") {
  CHECK((params_to_direction({0.0, 0.0}) - Vector3(0, 0, 1)).norm() < 1e-15);
  for (double phi : {-2.0, 0.0, 0.7, 3.0}) {
    CHECK((params_to_direction({kPi / 2, phi}) - Vector3(1, 0, 0)).norm() < 1e-15);
  }
  const Vector3 d = params_to_direction({0.3, 1.0});
  CHECK(std::abs(d.x() - 0.295520) < 1e-6);
  CHECK(std::abs(d.y() - 0.803888) < 1e-6);
  CHECK(std::abs(d.z() - 0.516171) < 1e-6);
}

TEST_CASE("directions round-trip through params") {
  RandomStream rng(1);
  for (int k = 0; k < 10000; ++k) {
    const Vector3 d = random_forward_direction(rng);
    const TrackParams p = direction_to_params(d);
    CHECK(p.is_valid());
    CHECK(p.is_forward());
    CHECK((params_to_direction(p) - d).norm() < 1e-12);
    CHECK(std::abs(params_to_direction(p).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("params round-trip through directions") {
  RandomStream rng(2);
  for (int k = 0; k < 10000; ++k) {
    const TrackParams p{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    const TrackParams back = direction_to_params(params_to_direction(p));
    CHECK(std::abs(back.theta - p.theta) < 1e-12);
    CHECK(std::abs(back.phi - p.phi) < 1e-12);
  }
}

TEST_CASE("polar and azimuth give unit forward directions") {
  RandomStream rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double polar = eta_to_polar(rng.uniform(1.0, 6.0));
    const Vector3 d = polar_azimuth_direction(polar, rng.uniform(0.0, 2 * kPi));
    CHECK(std::abs(d.norm() - 1.0) < 1e-12);
    CHECK(std::abs(std::acos(d.z()) - polar) < 1e-9);
  }
}

TEST_CASE("layer intersection") {
  const Vector2 axial = intersect_layer({0.0, 0.0}, 35.0);
  CHECK(axial.isZero());
  const Vector2 tilt = intersect_layer({0.1, 0.0}, 100.0);
  CHECK(std::abs(tilt.x() - 10.0335) < 1e-4);
  CHECK(tilt.y() == 0.0);
  CHECK_THROWS_AS(intersect_layer({0.0, 2.0}, 100.0), NoIntersection);
  CHECK_THROWS_AS(intersect_layer({0.3, -kPi / 2 - 0.1}, 100.0), NoIntersection);

  // An axial track never reaches the annulus.
  const auto g = DetectorGeometry::equally_spaced(20, 700.0, 8.0, 42.0);
  for (double z : g.layer_z) {
    CHECK_FALSE(g.contains_radius(intersect_layer({0.0, 0.0}, z).norm()));
  }
}

TEST_CASE("intersection is linear in z") {
  RandomStream rng(4);
  for (int k = 0; k < 1000; ++k) {
    const TrackParams p{rng.uniform(-0.7, 0.7), rng.uniform(-1.5, 1.5)};
    const double z1 = rng.uniform(1.0, 700.0);
    const double z2 = rng.uniform(1.0, 700.0);
    const Vector2 sum = intersect_layer(p, z1) + intersect_layer(p, z2);
    CHECK((intersect_layer(p, z1 + z2) - sum).norm() <= 1e-12 * (1.0 + sum.norm()));
  }
}

TEST_CASE("hit to track distance") {
  const TrackParams p{0.05, 0.02};
  const Vector2 at = intersect_layer(p, 350.0);
  CHECK(hit_track_distance({at.x(), at.y(), 350.0, 9}, p) == 0.0);
  CHECK(std::abs(hit_track_distance({at.x() + 3.0, at.y() + 4.0, 350.0, 9}, p) - 5.0) <
        1e-12);
}

TEST_CASE("distance is invariant under a common azimuthal rotation") {
  RandomStream rng(5);
  for (int k = 0; k < 1000; ++k) {
    const Vector3 d = random_forward_direction(rng);
    const double z = rng.uniform(35.0, 700.0);
    const SpacePoint hit{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0), z, 0};
    const double psi = rng.uniform(0.0, 2 * kPi);
    const Eigen::AngleAxisd rot(psi, Vector3::UnitZ());
    const Vector3 moved = rot * Vector3(hit.x, hit.y, hit.z);
    const SpacePoint rotated{moved.x(), moved.y(), moved.z(), 0};
    const double before = hit_track_distance(hit, direction_to_params(d));
    const double after = hit_track_distance(rotated, direction_to_params(rot * d));
    CHECK(std::abs(before - after) <= 1e-9 * (1.0 + before));
  }
}

TEST_CASE("distance matches its finite-difference directional derivative") {
  RandomStream rng(6);
  for (int k = 0; k < 200; ++k) {
    const TrackParams p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const double z = rng.uniform(35.0, 700.0);
    const Vector2 at = intersect_layer(p, z);
    const SpacePoint hit{at.x() + rng.uniform(1.0, 3.0), at.y() - rng.uniform(1.0, 3.0), z, 0};
    // Analytic: d s / d theta = -(r . d u / d theta) / s with u the crossing.
    const double ct = std::cos(p.theta);
    const double cp = std::cos(p.phi);
    const Vector2 du_dtheta{z / (ct * ct * cp), 0.0};
    const Vector2 r{hit.x - at.x(), hit.y - at.y()};
    const double analytic = -r.dot(du_dtheta) / r.norm();
    const double h = 1e-6;
    const double fd = (hit_track_distance(hit, {p.theta + h, p.phi}) -
                       hit_track_distance(hit, {p.theta - h, p.phi})) /
                      (2 * h);
    CHECK(std::abs(fd - analytic) <= 1e-6 * std::abs(analytic));
  }
}

TEST_CASE("toy line distance") {
  const Line2D line{0.3, 0.2};
  const PlanarHit on{0.2 + 0.7 * std::tan(0.3), 0.7, 3};
  CHECK(line2d_distance(on, line) < 1e-15);
  CHECK(line2d_distance({5.0, 123.0, 0}, Line2D{0.0, 2.0}) == 3.0);
  RandomStream rng(7);
  for (int k = 0; k < 100; ++k) {
    const PlanarHit h{rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0), 0};
    const Line2D below{0.0, 0.0};
    const double delta = rng.uniform(0.0, 1.0);
    const PlanarHit shifted{h.x + delta, h.y, 0};
    CHECK(std::abs(line2d_distance(shifted, below) - line2d_distance(h, below) - delta) <
          1e-12);
  }
}

TEST_CASE("angular separation") {
  CHECK(angular_separation({0.1, 0.2}, {0.1, 0.2}) == 0.0);
  CHECK(std::abs(angular_separation({0.0, 0.0}, {1e-3, 0.0}) - 1e-3) < 1e-15);
  CHECK(std::abs(angular_separation({0.0, 0.0}, {0.0, 0.5}) - 0.5) < 1e-15);
  // Near theta = pi/2 large phi differences are small angles.
  CHECK(angular_separation({1.57, 0.0}, {1.57, 1.0}) < 1e-3);
}

TEST_CASE("normalization keeps params in range") {
  const TrackParams a = normalized({2.0, 3 * kPi / 2});
  CHECK(a.theta == kPi / 2);
  CHECK(std::abs(a.phi + kPi / 2) < 1e-15);
  const TrackParams b = normalized({0.1, -kPi});
  CHECK(b.phi == kPi);
  CHECK(b.is_valid());
  CHECK_FALSE(TrackParams{0.0, -kPi}.is_valid());
}

TEST_CASE("detector geometry") {
  const auto g = DetectorGeometry::equally_spaced(20, 700.0, 8.0, 42.0);
  REQUIRE(g.n_layers() == 20);
  CHECK(g.layer_z.front() == 35.0);
  CHECK(g.layer_z.back() == 700.0);
  for (std::size_t k = 1; k < g.n_layers(); ++k) {
    CHECK(g.layer_z[k] > g.layer_z[k - 1]);
  }
  CHECK(g.contains_radius(8.0));
  CHECK(g.contains_radius(42.0));
  CHECK_FALSE(g.contains_radius(7.99));

  CHECK_THROWS_AS(DetectorGeometry::equally_spaced(0, 700.0, 8.0, 42.0), ConfigError);
  CHECK_THROWS_AS(DetectorGeometry::equally_spaced(5, 700.0, 42.0, 8.0), ConfigError);
  DetectorGeometry bad{{10.0, 5.0}, 1.0, 2.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
