#pragma once

#include "retina/candidate.hpp"
#include "retina/random.hpp"
#include "retina/response.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace retina {

struct ParamBox {
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};

  double area() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]); }
};

/// Seed distribution P_theta.
struct Prior {
  enum class Kind {
    /// eta uniform in [eta_min, eta_max], azimuth uniform; VELO model only.
    kPhysical,
    /// Uniform over the union of `boxes`, each picked with probability
    /// proportional to its area.
    kUniformBoxes,
  };

  Kind kind = Kind::kPhysical;
  double eta_min = 0.0;
  double eta_max = 0.0;
  std::vector<ParamBox> boxes;

  static Prior physical(double eta_min, double eta_max);
  static Prior uniform_box(ParamBox box);
  static Prior uniform_boxes(std::vector<ParamBox> boxes);

  void validate() const;
};

/// Truncated Newton update and multistart settings.
struct OptimizerConfig {
  int n_seeds = 1;
  /// Bandwidth of each update step; q is its length.
  std::vector<double> sigma_schedule;
  double r0 = 0.0;
  double cluster_radius = 0.0;
  Prior prior;
  int cg_max_iters = 5;
  double cg_tolerance = 1e-6;
  double armijo_c1 = 1e-4;
  int max_halvings = 8;

  int q() const { return static_cast<int>(sigma_schedule.size()); }
  void validate() const;
};

std::vector<Vector2> draw_seeds(int n, const Prior& prior, RandomStream& rng);

struct StepResult {
  Vector2 params;
  /// R at `params` for the bandwidth of the step.
  double value = 0.0;
  /// Backtracking halvings used; -1 when no step was taken.
  int halvings = -1;
  /// Direction came from the gradient fallback instead of CG.
  bool gradient_fallback = false;
};

/// One Truncated Newton ascent step on R at bandwidth `sigma`.
///
/// Solves -H d = g by conjugate gradients, starting from d = 0. CG stops on
/// the residual tolerance, on `cg_max_iters`, or on the first direction of
/// non-positive curvature of -H; in that case the iterate reached so far is
/// kept, or, if that happens on the first iteration, the direction is the
/// gradient with the length of the Gauss-Newton step. An Armijo
/// backtracking search then halves the step until R increases sufficiently;
/// if all halvings fail, `p` is returned, so R never decreases.
StepResult truncated_newton_step(CountingSurface& surface, const Vector2& p,
                                 double sigma, const OptimizerConfig& cfg);

struct SeedTrajectory {
  int seed_id = 0;
  /// Parameters before each step and after the last one (q + 1 entries).
  std::vector<Vector2> params;
  /// R after each step at that step's bandwidth (q entries).
  std::vector<double> values;

  const Vector2& final() const { return params.back(); }
  double final_response() const { return values.back(); }
};

/// Runs the q scheduled steps from one starting point.
SeedTrajectory run_seed(CountingSurface& surface, const Vector2& start,
                        int seed_id, const OptimizerConfig& cfg);

struct Solution {
  Vector2 params;
  double response = 0.0;
  int seed_id = 0;
};

/// Greedy leader clustering.
///
/// Solutions are visited by descending response, ties broken by ascending
/// params[0], params[1], then seed id. Each joins the earliest-founded
/// cluster whose leader lies within `radius` (surface separation) or founds a
/// new one. Leaders with response >= r0 are returned in visiting order.
std::vector<Candidate> cluster_solutions(std::span<const Solution> solutions,
                                         const ResponseSurface& surface,
                                         double radius, double r0);

struct MultistartResult {
  std::vector<Candidate> candidates;
  std::vector<SeedTrajectory> trajectories;
  /// Optimizer steps taken (n_seeds * q).
  std::uint64_t steps = 0;
  /// Evaluations made inside the steps; used to measure C0.
  EvalCounter inner;

  /// Accounted cost: steps * C0.
  double units(const CostModel& cost) const {
    return static_cast<double>(steps) * cost.step_cost;
  }
  /// Inner evaluation cost per step in response units.
  double measured_step_cost(const CostModel& cost) const {
    return steps ? inner.units(cost.full_cost) / static_cast<double>(steps)
                 : 0.0;
  }
};

/// The accelerated retina: draw seeds, update each q times, cluster.
MultistartResult run_multistart(const ResponseSurface& surface,
                                const OptimizerConfig& cfg, RandomStream& rng,
                                bool keep_trajectories = false);

}  // namespace retina
