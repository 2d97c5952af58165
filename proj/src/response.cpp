#include "retina/response.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace retina {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
constexpr double kEdge = 1e-6;

// Predicted hit position on a layer at z is z * u, with Jacobian z * jac and
// second derivatives z * second[{tt, tp, pp}] (t = theta, p = phi):
//   u = (tan t sec p, tan p)
struct VeloFrame {
  Vector2 u;
  Matrix2 jac;  // column 0: d/dtheta, column 1: d/dphi
  std::array<Vector2, 3> second;
};

bool make_velo_frame(double theta, double phi, VeloFrame& f) {
  const double ct = std::cos(theta);
  const double cp = std::cos(phi);
  if (!(ct * cp > 1e-12)) {
    return false;
  }
  const double tt = std::tan(theta);
  const double tp = std::tan(phi);
  const double sec_t2 = 1.0 / (ct * ct);
  const double sec_p = 1.0 / cp;
  const double sec_p2 = sec_p * sec_p;
  f.u = {tt * sec_p, tp};
  f.jac << sec_t2 * sec_p, tt * sec_p * tp,  //
      0.0, sec_p2;
  f.second[0] = {2.0 * sec_t2 * tt * sec_p, 0.0};
  f.second[1] = {sec_t2 * sec_p * tp, 0.0};
  f.second[2] = {tt * sec_p * (tp * tp + sec_p2), 2.0 * sec_p2 * tp};
  return true;
}

// Weighted moments of the residual r = hit - prediction over one layer.
struct Moments {
  double s0 = 0.0;
  Vector2 s1 = Vector2::Zero();
  Matrix2 s2 = Matrix2::Zero();

  void add(double w, const Vector2& r) {
    s0 += w;
    s1 += w * r;
    s2 += w * (r * r.transpose());
  }
};

// Chain rule for one layer at height z.
void accumulate_layer(const VeloFrame& f, double z, const Moments& m,
                      double inv_s2, ResponseEval& out) {
  const Matrix2 jac = z * f.jac;
  const Matrix2 jtj = jac.transpose() * jac;
  out.gradient += 2.0 * inv_s2 * (jac.transpose() * m.s1);
  Matrix2 h = 4.0 * inv_s2 * inv_s2 * (jac.transpose() * m.s2 * jac) -
              2.0 * inv_s2 * m.s0 * jtj;
  const double tt = z * f.second[0].dot(m.s1);
  const double tp = z * f.second[1].dot(m.s1);
  const double pp = z * f.second[2].dot(m.s1);
  h(0, 0) += 2.0 * inv_s2 * tt;
  h(0, 1) += 2.0 * inv_s2 * tp;
  h(1, 0) += 2.0 * inv_s2 * tp;
  h(1, 1) += 2.0 * inv_s2 * pp;
  h(1, 0) = h(0, 1);  // exact symmetry; the products above round differently
  out.hessian += h;
  out.gauss_newton += 2.0 * inv_s2 * m.s0 * jtj;
}

double cutoff_sq(const RetinaConfig& cfg) {
  if (cfg.cutoff_sigmas <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double c = cfg.cutoff_sigmas * cfg.sigma;
  return c * c;
}

// Toy model: prediction u = offset + y tan(angle).
struct ToyFrame {
  double tan_a;
  double sec_a2;
};

ToyFrame make_toy_frame(double angle) {
  const double c = std::cos(angle);
  return {std::tan(angle), 1.0 / (c * c)};
}

void accumulate_toy_hit(const ToyFrame& f, const PlanarHit& h, double w,
                        double r, double inv_s2, ResponseEval& out) {
  const Vector2 jac{h.y * f.sec_a2, 1.0};
  const Matrix2 jjt = jac * jac.transpose();
  out.gradient += 2.0 * inv_s2 * w * r * jac;
  Matrix2 hess = 4.0 * inv_s2 * inv_s2 * w * r * r * jjt - 2.0 * inv_s2 * w * jjt;
  hess(0, 0) += 2.0 * inv_s2 * w * r * (2.0 * h.y * f.sec_a2 * f.tan_a);
  hess(1, 0) = hess(0, 1);
  out.hessian += hess;
  out.gauss_newton += 2.0 * inv_s2 * w * jjt;
}

}  // namespace

double response(std::span<const SpacePoint> hits, const TrackParams& p,
                const RetinaConfig& cfg) {
  VeloFrame f;
  if (!make_velo_frame(p.theta, p.phi, f)) {
    return 0.0;
  }
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  const double cut2 = cutoff_sq(cfg);
  double total = 0.0;
  for (const SpacePoint& h : hits) {
    const Vector2 r = Vector2{h.x, h.y} - h.z * f.u;
    const double s2 = r.squaredNorm();
    if (s2 > cut2) {
      continue;
    }
    total += std::exp(-s2 * inv_s2);
  }
  return total;
}

ResponseEval response_full(std::span<const SpacePoint> hits,
                           const TrackParams& p, const RetinaConfig& cfg) {
  ResponseEval out;
  VeloFrame f;
  if (!make_velo_frame(p.theta, p.phi, f)) {
    return out;
  }
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  const double cut2 = cutoff_sq(cfg);
  for (const SpacePoint& h : hits) {
    const Vector2 r = Vector2{h.x, h.y} - h.z * f.u;
    const double s2 = r.squaredNorm();
    if (s2 > cut2) {
      continue;
    }
    const double w = std::exp(-s2 * inv_s2);
    out.value += w;
    Moments m;
    m.add(w, r);
    accumulate_layer(f, h.z, m, inv_s2, out);
  }
  return out;
}

double response(std::span<const PlanarHit> hits, const Line2D& line,
                const RetinaConfig& cfg) {
  const ToyFrame f = make_toy_frame(line.angle);
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  const double cut2 = cutoff_sq(cfg);
  double total = 0.0;
  for (const PlanarHit& h : hits) {
    const double r = h.x - (line.offset + h.y * f.tan_a);
    if (r * r > cut2) {
      continue;
    }
    total += std::exp(-r * r * inv_s2);
  }
  return total;
}

ResponseEval response_full(std::span<const PlanarHit> hits, const Line2D& line,
                           const RetinaConfig& cfg) {
  ResponseEval out;
  const ToyFrame f = make_toy_frame(line.angle);
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  const double cut2 = cutoff_sq(cfg);
  for (const PlanarHit& h : hits) {
    const double r = h.x - (line.offset + h.y * f.tan_a);
    if (r * r > cut2) {
      continue;
    }
    const double w = std::exp(-r * r * inv_s2);
    out.value += w;
    accumulate_toy_hit(f, h, w, r, inv_s2, out);
  }
  return out;
}

// ---------------------------------------------------------------------------

VeloSurface::VeloSurface(std::span<const SpacePoint> hits, double cutoff_sigmas,
                         double cell_size)
    : n_hits_(hits.size()),
      cutoff_sigmas_(cutoff_sigmas),
      cell_size_(cell_size) {
  double extent = 0.0;
  int max_layer = -1;
  for (const SpacePoint& h : hits) {
    extent = std::max({extent, std::abs(h.x), std::abs(h.y)});
    max_layer = std::max(max_layer, h.layer);
  }
  extent_ = extent + cell_size_;
  n_cells_ = std::max(1, static_cast<int>(std::ceil(2.0 * extent_ / cell_size_)));

  // Group by layer index; z of a layer is taken from its hits.
  std::vector<std::vector<const SpacePoint*>> by_layer(
      static_cast<std::size_t>(max_layer + 1));
  for (const SpacePoint& h : hits) {
    by_layer[static_cast<std::size_t>(h.layer)].push_back(&h);
  }
  const auto n_total = static_cast<std::size_t>(n_cells_) *
                       static_cast<std::size_t>(n_cells_);
  auto cell_of = [&](double v) {
    return std::clamp(static_cast<int>(std::floor((v + extent_) / cell_size_)),
                      0, n_cells_ - 1);
  };
  for (auto& members : by_layer) {
    if (members.empty()) {
      continue;
    }
    Layer layer;
    layer.z = members.front()->z;
    std::vector<std::size_t> key(members.size());
    layer.start.assign(n_total + 1, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      key[i] = static_cast<std::size_t>(cell_of(members[i]->y)) *
                   static_cast<std::size_t>(n_cells_) +
               static_cast<std::size_t>(cell_of(members[i]->x));
      ++layer.start[key[i] + 1];
    }
    for (std::size_t c = 0; c < n_total; ++c) {
      layer.start[c + 1] += layer.start[c];
    }
    layer.hits.resize(members.size());
    std::vector<std::uint32_t> fill(layer.start.begin(), layer.start.end() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      layer.hits[fill[key[i]]++] = {members[i]->x, members[i]->y};
    }
    layers_.push_back(std::move(layer));
  }
}

template <typename Visit>
void VeloSurface::for_each_near(const Layer& layer, const Vector2& at,
                                double radius, Visit&& visit) const {
  if (!std::isfinite(radius)) {
    for (const Vector2& h : layer.hits) {
      visit(h);
    }
    return;
  }
  auto cell_of = [&](double v) {
    const double c = std::floor((v + extent_) / cell_size_);
    return static_cast<int>(
        std::clamp(c, 0.0, static_cast<double>(n_cells_ - 1)));
  };
  const int x0 = cell_of(at.x() - radius);
  const int x1 = cell_of(at.x() + radius);
  const int y0 = cell_of(at.y() - radius);
  const int y1 = cell_of(at.y() + radius);
  for (int cy = y0; cy <= y1; ++cy) {
    const std::size_t row = static_cast<std::size_t>(cy) *
                            static_cast<std::size_t>(n_cells_);
    const std::uint32_t begin = layer.start[row + static_cast<std::size_t>(x0)];
    const std::uint32_t end = layer.start[row + static_cast<std::size_t>(x1) + 1];
    for (std::uint32_t i = begin; i < end; ++i) {
      visit(layer.hits[i]);
    }
  }
}

double VeloSurface::value(const Vector2& p, double sigma) const {
  VeloFrame f;
  if (!make_velo_frame(p[0], p[1], f)) {
    return 0.0;
  }
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double radius = cutoff_sigmas_ > 0.0
                            ? cutoff_sigmas_ * sigma
                            : std::numeric_limits<double>::infinity();
  const double cut2 = radius * radius;
  double total = 0.0;
  for (const Layer& layer : layers_) {
    const Vector2 at = layer.z * f.u;
    for_each_near(layer, at, radius, [&](const Vector2& h) {
      const double s2 = (h - at).squaredNorm();
      if (s2 <= cut2) {
        total += std::exp(-s2 * inv_s2);
      }
    });
  }
  return total;
}

ResponseEval VeloSurface::evaluate(const Vector2& p, double sigma) const {
  ResponseEval out;
  VeloFrame f;
  if (!make_velo_frame(p[0], p[1], f)) {
    return out;
  }
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double radius = cutoff_sigmas_ > 0.0
                            ? cutoff_sigmas_ * sigma
                            : std::numeric_limits<double>::infinity();
  const double cut2 = radius * radius;
  for (const Layer& layer : layers_) {
    const Vector2 at = layer.z * f.u;
    Moments m;
    for_each_near(layer, at, radius, [&](const Vector2& h) {
      const Vector2 r = h - at;
      const double s2 = r.squaredNorm();
      if (s2 <= cut2) {
        m.add(std::exp(-s2 * inv_s2), r);
      }
    });
    if (m.s0 == 0.0) {
      continue;
    }
    out.value += m.s0;
    accumulate_layer(f, layer.z, m, inv_s2, out);
  }
  return out;
}

Vector2 VeloSurface::project(const Vector2& p) const {
  TrackParams t = normalized(TrackParams::from_vector(p));
  t.theta = std::clamp(t.theta, -kHalfPi + kEdge, kHalfPi - kEdge);
  return t.as_vector();
}

double VeloSurface::separation(const Vector2& a, const Vector2& b) const {
  return angular_separation(TrackParams::from_vector(a),
                            TrackParams::from_vector(b));
}

// ---------------------------------------------------------------------------

ToySurface::ToySurface(std::span<const PlanarHit> hits, double cutoff_sigmas)
    : hits_(hits.begin(), hits.end()), cutoff_sigmas_(cutoff_sigmas) {}

double ToySurface::value(const Vector2& p, double sigma) const {
  return response(hits_, Line2D::from_vector(p), {sigma, cutoff_sigmas_});
}

ResponseEval ToySurface::evaluate(const Vector2& p, double sigma) const {
  return response_full(hits_, Line2D::from_vector(p), {sigma, cutoff_sigmas_});
}

Vector2 ToySurface::project(const Vector2& p) const {
  return {std::clamp(p[0], -kHalfPi + kEdge, kHalfPi - kEdge), p[1]};
}

double ToySurface::separation(const Vector2& a, const Vector2& b) const {
  return (a - b).norm();
}

// ---------------------------------------------------------------------------

double measure_full_cost_ratio(const ResponseSurface& surface,
                               std::span<const Vector2> points, double sigma,
                               int repetitions) {
  using clock = std::chrono::steady_clock;
  double sink = 0.0;
  const auto t0 = clock::now();
  for (int rep = 0; rep < repetitions; ++rep) {
    for (const Vector2& p : points) {
      sink += surface.value(p, sigma);
    }
  }
  const auto t1 = clock::now();
  for (int rep = 0; rep < repetitions; ++rep) {
    for (const Vector2& p : points) {
      sink += surface.evaluate(p, sigma).value;
    }
  }
  const auto t2 = clock::now();
  const double plain = std::chrono::duration<double>(t1 - t0).count();
  const double full = std::chrono::duration<double>(t2 - t1).count();
  // keeps the loops from being optimized away
  if (sink < 0.0) {
    return -1.0;
  }
  return plain > 0.0 ? full / plain : 0.0;
}

}  // namespace retina
