#pragma once

#include "retina/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace retina {

enum class DistanceModel { kVelo3D, kToy2D };

/// Bandwidth and far-hit cutoff of the Gaussian response.
struct RetinaConfig {
  double sigma = 0.0;
  /// Hits farther than cutoff_sigmas * sigma are skipped; each skipped term
  /// is below exp(-cutoff_sigmas^2). Zero or negative evaluates every hit.
  double cutoff_sigmas = 8.0;

  static constexpr double kNoCutoff = 0.0;
};

/// R, its gradient and Hessian with respect to the two track parameters.
///
/// `gauss_newton` is (2 / sigma^2) sum_k w_k J_k^T J_k, where J_k is the
/// Jacobian of the predicted hit position. It is positive semi-definite and
/// sets a natural step scale where the Hessian is not negative definite.
struct ResponseEval {
  double value = 0.0;
  Vector2 gradient = Vector2::Zero();
  Matrix2 hessian = Matrix2::Zero();
  Matrix2 gauss_newton = Matrix2::Zero();
};

/// Evaluation tallies. Each worker owns one; merge after joining.
struct EvalCounter {
  std::uint64_t response_calls = 0;
  std::uint64_t full_calls = 0;

  void merge(const EvalCounter& other) {
    response_calls += other.response_calls;
    full_calls += other.full_calls;
  }

  /// Cost in plain-response units: one per response, `full_cost` per full
  /// evaluation.
  double units(double full_cost) const {
    return static_cast<double>(response_calls) +
           full_cost * static_cast<double>(full_calls);
  }
};

// Reference evaluation: a single pass over the hits in input order.
// response() and response_full() accumulate identically, so their values
// agree bitwise. Tracks that are not forward-going see no hits.

double response(std::span<const SpacePoint> hits, const TrackParams& p,
                const RetinaConfig& cfg);
ResponseEval response_full(std::span<const SpacePoint> hits,
                           const TrackParams& p, const RetinaConfig& cfg);

double response(std::span<const PlanarHit> hits, const Line2D& line,
                const RetinaConfig& cfg);
ResponseEval response_full(std::span<const PlanarHit> hits, const Line2D& line,
                           const RetinaConfig& cfg);

/// Response of a fixed hit set as a function of a parameter 2-vector.
class ResponseSurface {
 public:
  virtual ~ResponseSurface() = default;

  virtual DistanceModel model() const = 0;
  virtual std::size_t hit_count() const = 0;

  virtual double value(const Vector2& p, double sigma) const = 0;
  virtual ResponseEval evaluate(const Vector2& p, double sigma) const = 0;

  /// Nearest point of the parameter domain.
  virtual Vector2 project(const Vector2& p) const = 0;

  /// Distance used to compare solutions. Must bound |a[0] - b[0]| from above.
  virtual double separation(const Vector2& a, const Vector2& b) const = 0;
};

/// Surface over (theta, phi) for space points on annular layers.
///
/// Hits are bucketed per layer on a square grid of `cell_size` mm so that a
/// query with a cutoff only visits the cells that can contribute. The layer
/// terms are aggregated into weighted moments of the residual before the
/// chain rule is applied, so the Jacobian of the predicted position is
/// computed once per layer rather than once per hit.
class VeloSurface final : public ResponseSurface {
 public:
  VeloSurface(std::span<const SpacePoint> hits, double cutoff_sigmas,
              double cell_size = 2.0);

  DistanceModel model() const override { return DistanceModel::kVelo3D; }
  std::size_t hit_count() const override { return n_hits_; }
  double value(const Vector2& p, double sigma) const override;
  ResponseEval evaluate(const Vector2& p, double sigma) const override;
  Vector2 project(const Vector2& p) const override;
  double separation(const Vector2& a, const Vector2& b) const override;

 private:
  struct Layer {
    double z = 0.0;
    std::vector<Vector2> hits;          // sorted by cell
    std::vector<std::uint32_t> start;   // cell c owns [start[c], start[c+1])
  };

  template <typename Visit>
  void for_each_near(const Layer& layer, const Vector2& at, double radius,
                     Visit&& visit) const;

  std::vector<Layer> layers_;
  std::size_t n_hits_ = 0;
  double cutoff_sigmas_;
  double cell_size_;
  double extent_ = 0.0;  // cells tile [-extent, extent]^2
  int n_cells_ = 1;      // per axis
};

/// Surface over (angle, offset) for the toy model. Evaluates every hit.
class ToySurface final : public ResponseSurface {
 public:
  ToySurface(std::span<const PlanarHit> hits, double cutoff_sigmas);

  DistanceModel model() const override { return DistanceModel::kToy2D; }
  std::size_t hit_count() const override { return hits_.size(); }
  double value(const Vector2& p, double sigma) const override;
  ResponseEval evaluate(const Vector2& p, double sigma) const override;
  Vector2 project(const Vector2& p) const override;
  double separation(const Vector2& a, const Vector2& b) const override;

 private:
  std::vector<PlanarHit> hits_;
  double cutoff_sigmas_;
};

/// Wraps a shared surface and tallies the calls made through it.
class CountingSurface {
 public:
  explicit CountingSurface(const ResponseSurface& surface)
      : surface_(surface) {}

  double value(const Vector2& p, double sigma) {
    ++counter_.response_calls;
    return surface_.value(p, sigma);
  }
  ResponseEval evaluate(const Vector2& p, double sigma) {
    ++counter_.full_calls;
    return surface_.evaluate(p, sigma);
  }
  const ResponseSurface& surface() const { return surface_; }
  const EvalCounter& counter() const { return counter_; }

 private:
  const ResponseSurface& surface_;
  EvalCounter counter_;
};

/// Accounting constants: cost of a full evaluation (C) and of one optimizer
/// step (C0), both in units of one plain response evaluation.
struct CostModel {
  double full_cost = 0.0;
  double step_cost = 0.0;
};

/// Measured ratio of evaluate() to value() wall time on `surface`, averaged
/// over `points`. Informational; accounting always uses CostModel.
double measure_full_cost_ratio(const ResponseSurface& surface,
                               std::span<const Vector2> points, double sigma,
                               int repetitions);

}  // namespace retina
