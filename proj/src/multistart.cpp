#include "retina/multistart.hpp"

#include "retina/errors.hpp"
#include "retina/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace retina {

Prior Prior::physical(double eta_min, double eta_max) {
  Prior p;
  p.kind = Kind::kPhysical;
  p.eta_min = eta_min;
  p.eta_max = eta_max;
  return p;
}

Prior Prior::uniform_box(ParamBox box) { return uniform_boxes({box}); }

Prior Prior::uniform_boxes(std::vector<ParamBox> boxes) {
  Prior p;
  p.kind = Kind::kUniformBoxes;
  p.boxes = std::move(boxes);
  return p;
}

void Prior::validate() const {
  if (kind == Kind::kPhysical) {
    if (!(eta_min < eta_max)) {
      throw ConfigError("prior: eta_min must be below eta_max");
    }
    return;
  }
  if (boxes.empty()) {
    throw ConfigError("prior: at least one box is required");
  }
  for (const ParamBox& b : boxes) {
    if (!(b.area() > 0.0) || !(b.hi[0] > b.lo[0])) {
      throw ConfigError("prior: boxes must have positive extent");
    }
  }
}

void OptimizerConfig::validate() const {
  if (n_seeds < 1) {
    throw ConfigError("optimizer: n_seeds must be at least 1");
  }
  if (sigma_schedule.empty()) {
    throw ConfigError("optimizer: sigma schedule is empty");
  }
  for (const double s : sigma_schedule) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("optimizer: every sigma must be positive");
    }
  }
  if (!(cluster_radius >= 0.0)) {
    throw ConfigError("optimizer: cluster_radius must be non-negative");
  }
  if (cg_max_iters < 1 || !(cg_tolerance > 0.0)) {
    throw ConfigError("optimizer: invalid CG settings");
  }
  if (max_halvings < 0 || !(armijo_c1 > 0.0 && armijo_c1 < 1.0)) {
    throw ConfigError("optimizer: invalid line search settings");
  }
  prior.validate();
}

std::vector<Vector2> draw_seeds(int n, const Prior& prior, RandomStream& rng) {
  if (n < 1) {
    throw InvalidInput("draw_seeds: n must be at least 1");
  }
  prior.validate();
  std::vector<Vector2> seeds;
  seeds.reserve(static_cast<std::size_t>(n));
  if (prior.kind == Prior::Kind::kPhysical) {
    for (int i = 0; i < n; ++i) {
      seeds.push_back(
          sample_physical_track(prior.eta_min, prior.eta_max, rng).as_vector());
    }
    return seeds;
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const ParamBox& b : prior.boxes) {
    total += b.area();
    cumulative.push_back(total);
  }
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
            cumulative.begin()),
        prior.boxes.size() - 1);
    const ParamBox& b = prior.boxes[k];
    const double u = rng.uniform(b.lo[0], b.hi[0]);
    const double v = rng.uniform(b.lo[1], b.hi[1]);
    seeds.emplace_back(u, v);
  }
  return seeds;
}

StepResult truncated_newton_step(CountingSurface& surface, const Vector2& p,
                                 double sigma, const OptimizerConfig& cfg) {
  const ResponseEval e = surface.evaluate(p, sigma);
  StepResult result{p, e.value, -1, false};

  const Vector2& g = e.gradient;
  const double g_norm = g.norm();
  if (!(g_norm > 0.0) || !std::isfinite(g_norm)) {
    return result;
  }

  // CG on the minimization of -R: (-H) d = g.
  const Matrix2 a = -e.hessian;
  Vector2 d = Vector2::Zero();
  Vector2 r = g;
  Vector2 s = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < cfg.cg_max_iters; ++it) {
    const Vector2 as = a * s;
    const double curvature = s.dot(as);
    if (!(curvature > 0.0)) {
      if (it == 0) {
        result.gradient_fallback = true;
      }
      break;
    }
    const double alpha = rr / curvature;
    d += alpha * s;
    r -= alpha * as;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= cfg.cg_tolerance * g_norm) {
      break;
    }
    s = r + (rr_next / rr) * s;
    rr = rr_next;
  }

  if (result.gradient_fallback) {
    double length = 0.0;
    const Matrix2& gn = e.gauss_newton;
    if (gn.determinant() > 1e-12 * gn.squaredNorm()) {
      length = gn.ldlt().solve(g).norm();
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      length = g_norm / std::max(e.hessian.norm(), 1e-300);
    }
    d = (length / g_norm) * g;
  }

  const double slope = std::max(0.0, g.dot(d));
  double t = 1.0;
  for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
    const Vector2 trial = surface.surface().project(p + t * d);
    const double v = surface.value(trial, sigma);
    if (v >= e.value + cfg.armijo_c1 * t * slope && v >= e.value) {
      result.params = trial;
      result.value = v;
      result.halvings = h;
      return result;
    }
  }
  return result;
}

SeedTrajectory run_seed(CountingSurface& surface, const Vector2& start,
                        int seed_id, const OptimizerConfig& cfg) {
  SeedTrajectory traj;
  traj.seed_id = seed_id;
  traj.params.reserve(cfg.sigma_schedule.size() + 1);
  traj.values.reserve(cfg.sigma_schedule.size());
  Vector2 x = surface.surface().project(start);
  traj.params.push_back(x);
  for (const double sigma : cfg.sigma_schedule) {
    const StepResult step = truncated_newton_step(surface, x, sigma, cfg);
    x = step.params;
    traj.params.push_back(x);
    traj.values.push_back(step.value);
  }
  return traj;
}

std::vector<Candidate> cluster_solutions(std::span<const Solution> solutions,
                                         const ResponseSurface& surface,
                                         double radius, double r0) {
  std::vector<std::size_t> order(solutions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Solution& x = solutions[a];
    const Solution& y = solutions[b];
    if (x.response != y.response) {
      return x.response > y.response;
    }
    if (x.params[0] != y.params[0]) {
      return x.params[0] < y.params[0];
    }
    if (x.params[1] != y.params[1]) {
      return x.params[1] < y.params[1];
    }
    return x.seed_id < y.seed_id;
  });

  std::vector<Candidate> leaders;
  // separation(a, b) >= |a[0] - b[0]|, so only leaders inside the window
  // [x0 - radius, x0 + radius] on the first coordinate can match.
  std::multimap<double, std::size_t> by_first;
  for (const std::size_t idx : order) {
    const Solution& s = solutions[idx];
    std::size_t best = leaders.size();
    for (auto it = by_first.lower_bound(s.params[0] - radius);
         it != by_first.end() && it->first <= s.params[0] + radius; ++it) {
      if (it->second < best &&
          surface.separation(leaders[it->second].params, s.params) <= radius) {
        best = it->second;
      }
    }
    if (best < leaders.size()) {
      ++leaders[best].cluster_size;
      continue;
    }
    leaders.push_back({s.params, s.response, 1, s.seed_id, std::nullopt});
    by_first.emplace(s.params[0], leaders.size() - 1);
  }

  std::vector<Candidate> out;
  for (const Candidate& c : leaders) {
    if (c.response >= r0) {
      out.push_back(c);
    }
  }
  return out;
}

MultistartResult run_multistart(const ResponseSurface& surface,
                                const OptimizerConfig& cfg, RandomStream& rng,
                                bool keep_trajectories) {
  cfg.validate();
  const std::vector<Vector2> seeds = draw_seeds(cfg.n_seeds, cfg.prior, rng);

  MultistartResult result;
  CountingSurface counting(surface);
  std::vector<Solution> finals;
  finals.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SeedTrajectory traj =
        run_seed(counting, seeds[i], static_cast<int>(i), cfg);
    finals.push_back({traj.final(), traj.final_response(), traj.seed_id});
    if (keep_trajectories) {
      result.trajectories.push_back(std::move(traj));
    }
  }
  result.steps = static_cast<std::uint64_t>(cfg.n_seeds) *
                 static_cast<std::uint64_t>(cfg.q());
  result.inner = counting.counter();
  result.candidates =
      cluster_solutions(finals, surface, cfg.cluster_radius, cfg.r0);
  return result;
}

}  // namespace retina
