#include "fixtures.hpp"

#include "retina/errors.hpp"
#include "retina/grid_retina.hpp"
#include "retina/multistart.hpp"
#include "retina/toy.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace retina;

namespace {

// R = c - (p - m)^T A (p - m) / 2 with A symmetric positive definite.
class QuadraticSurface final : public ResponseSurface {
 public:
  QuadraticSurface(Vector2 m, Matrix2 a, double c) : m_(m), a_(a), c_(c) {}

  DistanceModel model() const override { return DistanceModel::kToy2D; }
  std::size_t hit_count() const override { return 0; }
  double value(const Vector2& p, double) const override {
    const Vector2 d = p - m_;
    return c_ - 0.5 * d.dot(a_ * d);
  }
  ResponseEval evaluate(const Vector2& p, double sigma) const override {
    ResponseEval e;
    e.value = value(p, sigma);
    e.gradient = -a_ * (p - m_);
    e.hessian = -a_;
    e.gauss_newton = a_;
    return e;
  }
  Vector2 project(const Vector2& p) const override { return p; }
  double separation(const Vector2& a, const Vector2& b) const override {
    return (a - b).norm();
  }

 private:
  Vector2 m_;
  Matrix2 a_;
  double c_;
};

OptimizerConfig velo_optimizer(int n_seeds) {
  OptimizerConfig cfg;
  cfg.n_seeds = n_seeds;
  cfg.sigma_schedule = {0.3, 0.175, 0.05};
  cfg.r0 = 1.5;
  cfg.cluster_radius = 5e-4;
  cfg.prior = Prior::physical(1.0, 6.0);
  return cfg;
}

OptimizerConfig toy_optimizer(int n_seeds) {
  OptimizerConfig cfg;
  cfg.n_seeds = n_seeds;
  cfg.sigma_schedule = {0.08, 0.04, 0.02};
  cfg.r0 = 0.0;
  cfg.cluster_radius = 0.01;
  cfg.prior = Prior::uniform_box({{-0.6, 0.0}, {0.6, 1.0}});
  return cfg;
}

// Two-sided Kolmogorov-Smirnov statistic against U[lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = (xs[k] - lo) / (hi - lo);
    d = std::max({d, (static_cast<double>(k) + 1.0) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

}  // namespace

TEST_CASE("newton step on a concave quadratic lands on the maximizer") {
  RandomStream rng(1);
  for (int k = 0; k < 100; ++k) {
    Matrix2 l;
    l << rng.uniform(0.5, 3.0), 0.0, rng.uniform(-1.0, 1.0), rng.uniform(0.5, 3.0);
    const Matrix2 a = l * l.transpose();
    const Vector2 m{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const QuadraticSurface q(m, a, 5.0);
    CountingSurface counting(q);
    OptimizerConfig cfg = toy_optimizer(1);
    const Vector2 start{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const StepResult step = truncated_newton_step(counting, start, 1.0, cfg);
    CHECK((step.params - m).norm() < 1e-8);
    CHECK(step.halvings == 0);
    CHECK_FALSE(step.gradient_fallback);
  }
}

TEST_CASE("a step at the maximum leaves the point unchanged") {
  const QuadraticSurface q({0.2, 0.3}, Matrix2::Identity(), 1.0);
  CountingSurface counting(q);
  const StepResult step = truncated_newton_step(counting, {0.2, 0.3}, 1.0, toy_optimizer(1));
  CHECK(step.params == Vector2(0.2, 0.3));
  CHECK(step.halvings == -1);
}

TEST_CASE("a step near a single hit increases the response") {
  const std::vector<SpacePoint> hit{{3.0, 2.0, 350.0, 9}};
  const TrackParams on = direction_to_params(Vector3(3.0, 2.0, 350.0).normalized());
  const VeloSurface surface(hit, RetinaConfig::kNoCutoff);
  CountingSurface counting(surface);
  for (double offset : {1e-4, -3e-4, 8e-4}) {
    const Vector2 p = on.as_vector() + Vector2(offset, 0.5 * offset);
    const double before = surface.value(p, 0.3);
    const StepResult step = truncated_newton_step(counting, p, 0.3, velo_optimizer(1));
    CHECK(step.value > before);
    CHECK(step.value == surface.value(step.params, 0.3));
  }
}

TEST_CASE("steps never decrease the response at their bandwidth") {
  int trajectories = 0;
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Event ev = generate_event(testing::velo_config(20, 700 + seed));
    const auto pts = ev.points();
    const VeloSurface surface(pts, 8.0);
    OptimizerConfig cfg = velo_optimizer(100);
    // Seeds near tracks, so that the steps do real work.
    std::vector<ParamBox> boxes;
    for (const TrueTrack& t : ev.true_tracks) {
      boxes.push_back({{t.params.theta - 2e-3, t.params.phi - 2e-3},
                       {t.params.theta + 2e-3, t.params.phi + 2e-3}});
    }
    cfg.prior = Prior::uniform_boxes(boxes);
    RandomStream rng(seed);
    const MultistartResult res = run_multistart(surface, cfg, rng, true);
    REQUIRE(res.trajectories.size() == 100);
    for (const SeedTrajectory& t : res.trajectories) {
      REQUIRE(t.params.size() == 4);
      REQUIRE(t.values.size() == 3);
      for (std::size_t j = 0; j < 3; ++j) {
        const double sigma = cfg.sigma_schedule[j];
        const double before = surface.value(t.params[j], sigma);
        CHECK(t.values[j] >= before);
        CHECK(t.values[j] == surface.value(t.params[j + 1], sigma));
        improved += t.values[j] > before;
      }
      ++trajectories;
    }
  }
  CHECK(trajectories == 1000);
  CHECK(improved > 1000);
}

TEST_CASE("repeated steps at one bandwidth climb monotonically") {
  const Event ev = generate_event(testing::velo_config(10, 9));
  const auto pts = ev.points();
  const VeloSurface surface(pts, 8.0);
  CountingSurface counting(surface);
  RandomStream rng(2);
  for (const TrueTrack& t : ev.true_tracks) {
    Vector2 p = t.params.as_vector() + Vector2(rng.normal(0, 1e-3), rng.normal(0, 1e-3));
    double last = surface.value(p, 0.175);
    for (int k = 0; k < 10; ++k) {
      const StepResult s = truncated_newton_step(counting, p, 0.175, velo_optimizer(1));
      CHECK(s.value >= last);
      last = s.value;
      p = s.params;
    }
  }
}

TEST_CASE("seeds drawn from the physical prior are valid tracks") {
  RandomStream rng(3);
  for (const Vector2& s : draw_seeds(10000, Prior::physical(1.0, 6.0), rng)) {
    const TrackParams p = TrackParams::from_vector(s);
    CHECK(p.is_valid());
    CHECK(p.is_forward());
  }
  CHECK_THROWS_AS(draw_seeds(0, Prior::physical(1.0, 6.0), rng), InvalidInput);
}

TEST_CASE("uniform box prior has uniform marginals") {
  RandomStream rng(4);
  const int n = 100000;
  const auto seeds = draw_seeds(n, Prior::uniform_box({{-0.7, -1.0}, {0.7, 2.0}}), rng);
  std::vector<double> first;
  std::vector<double> second;
  for (const Vector2& s : seeds) {
    first.push_back(s[0]);
    second.push_back(s[1]);
  }
  const double critical = 1.628 / std::sqrt(static_cast<double>(n));  // 1%
  CHECK(ks_uniform(first, -0.7, 0.7) < critical);
  CHECK(ks_uniform(second, -1.0, 2.0) < critical);
}

TEST_CASE("several boxes are picked in proportion to their area") {
  RandomStream rng(5);
  const int n = 30000;
  const auto seeds = draw_seeds(
      n, Prior::uniform_boxes({{{0.0, 0.0}, {1.0, 1.0}}, {{5.0, 0.0}, {7.0, 1.0}}}), rng);
  const auto in_second = std::count_if(seeds.begin(), seeds.end(),
                                       [](const Vector2& s) { return s[0] >= 5.0; });
  // Binomial(n, 2/3).
  CHECK(std::abs(static_cast<double>(in_second) - n * 2.0 / 3.0) <
        4.0 * std::sqrt(n * 2.0 / 9.0));
}

TEST_CASE("seed lists are reproducible") {
  RandomStream a(77);
  RandomStream b(77);
  CHECK(draw_seeds(100, Prior::physical(1.0, 6.0), a) ==
        draw_seeds(100, Prior::physical(1.0, 6.0), b));
}

TEST_CASE("clustering") {
  const QuadraticSurface metric({0, 0}, Matrix2::Identity(), 0.0);
  SUBCASE("identical solutions form one cluster") {
    const std::vector<Solution> s{{{0.1, 0.2}, 5.0, 0}, {{0.1, 0.2}, 5.0, 1}, {{0.1, 0.2}, 5.0, 2}};
    const auto c = cluster_solutions(s, metric, 1e-3, 1.0);
    REQUIRE(c.size() == 1);
    CHECK(c[0].cluster_size == 3);
    CHECK(c[0].seed_id == 0);
  }
  SUBCASE("distant solutions stay apart") {
    const std::vector<Solution> s{{{0.0, 0.0}, 5.0, 0}, {{0.01, 0.0}, 4.0, 1}};
    CHECK(cluster_solutions(s, metric, 1e-3, 1.0).size() == 2);
  }
  SUBCASE("threshold") {
    const std::vector<Solution> s{{{0.0, 0.0}, 0.5, 0}, {{0.3, 0.0}, 0.9, 1}};
    CHECK(cluster_solutions(s, metric, 1e-3, 1.0).empty());
    CHECK(cluster_solutions(s, metric, 1e-3, 0.9).size() == 1);
  }
  SUBCASE("leaders are the best responses, sorted descending") {
    const std::vector<Solution> s{{{0.0, 0.0}, 3.0, 0},
                                  {{0.0005, 0.0}, 4.0, 1},
                                  {{0.5, 0.5}, 6.0, 2},
                                  {{0.5, 0.5007}, 1.0, 3}};
    const auto c = cluster_solutions(s, metric, 1e-3, 0.0);
    REQUIRE(c.size() == 2);
    CHECK(c[0].seed_id == 2);
    CHECK(c[0].cluster_size == 2);
    CHECK(c[1].seed_id == 1);
    CHECK(c[1].response == 4.0);
  }
  SUBCASE("result does not depend on input order") {
    RandomStream rng(6);
    std::vector<Solution> s;
    for (int k = 0; k < 300; ++k) {
      // Few distinct responses, so ties occur.
      s.push_back({{rng.uniform(0.0, 0.02), rng.uniform(0.0, 0.02)},
                   std::floor(rng.uniform(0.0, 4.0)), k});
    }
    const auto reference = cluster_solutions(s, metric, 3e-3, 0.0);
    std::mt19937 shuffler(1);
    for (int rep = 0; rep < 5; ++rep) {
      std::shuffle(s.begin(), s.end(), shuffler);
      const auto c = cluster_solutions(s, metric, 3e-3, 0.0);
      REQUIRE(c.size() == reference.size());
      for (std::size_t k = 0; k < c.size(); ++k) {
        CHECK(c[k].params == reference[k].params);
        CHECK(c[k].seed_id == reference[k].seed_id);
        CHECK(c[k].cluster_size == reference[k].cluster_size);
      }
    }
  }
}

TEST_CASE("a single clean track gives exactly one candidate") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SimConfig c = testing::velo_config(1, seed);
    c.geometry = DetectorGeometry::equally_spaced(20, 700.0, 0.0, 1000.0);
    c.p_hit = 1.0;
    c.noise_mean = 0.0;
    const Event ev = generate_event(c);
    REQUIRE(ev.hits.size() == 20);
    const auto pts = ev.points();
    const VeloSurface surface(pts, 8.0);
    const TrackParams truth = ev.true_tracks[0].params;

    OptimizerConfig cfg = velo_optimizer(50);
    cfg.prior = Prior::uniform_box({{truth.theta - 3e-3, truth.phi - 3e-3},
                                    {truth.theta + 3e-3, truth.phi + 3e-3}});
    RandomStream rng(seed);
    const auto res = run_multistart(surface, cfg, rng);
    REQUIRE(res.candidates.size() == 1);

    // Oracle: the best node of a fine local grid at the last bandwidth.
    const ParamGrid g = ParamGrid::with_step({truth.theta - 2e-3, truth.theta + 2e-3},
                                             {truth.phi - 2e-3, truth.phi + 2e-3}, 2e-5);
    EvalCounter counter;
    const ResponseGrid rg = evaluate_grid(surface, g, 0.05, counter);
    const auto best = std::max_element(rg.values.begin(), rg.values.end()) - rg.values.begin();
    const Vector2 node = g.node(static_cast<int>(best / g.n[1]), static_cast<int>(best % g.n[1]));
    const TrackParams found = TrackParams::from_vector(res.candidates[0].params);
    CHECK(angular_separation(found, TrackParams::from_vector(node)) < 1e-3);
    CHECK(angular_separation(found, truth) < 1e-3);
  }
}

TEST_CASE("no hits give no candidates") {
  const std::vector<SpacePoint> none;
  const VeloSurface surface(none, 8.0);
  RandomStream rng(1);
  const auto res = run_multistart(surface, velo_optimizer(20), rng);
  CHECK(res.candidates.empty());
  CHECK(res.steps == 60);
}

TEST_CASE("toy multistart finds the grid maxima") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyFixture f = fig1_fixture(seed);
    const ToyEvent ev = generate_toy_event(f.config);
    const auto pts = ev.points();
    const ToySurface surface(pts, RetinaConfig::kNoCutoff);
    EvalCounter counter;
    const auto grid = evaluate_grid(surface, f.grid, f.sigma, counter);
    const double peak = *std::max_element(grid.values.begin(), grid.values.end());
    const auto maxima = find_local_maxima(grid, f.relative_threshold * peak);
    REQUIRE(maxima.size() == 2);

    // Three steps can leave stragglers on the flat side of a peak, so only
    // the two strongest candidates are compared with the grid.
    OptimizerConfig cfg = toy_optimizer(400);
    cfg.cluster_radius = 0.05;
    cfg.r0 = f.relative_threshold * peak;
    RandomStream rng(seed);
    const auto res = run_multistart(surface, cfg, rng);
    REQUIRE(res.candidates.size() >= 2);
    for (const GridPeak& m : maxima) {
      const Vector2 at = estimate_track(grid, m.cell);
      bool found = false;
      for (std::size_t k = 0; k < 2; ++k) {
        found = found ||
                (res.candidates[k].params - at).cwiseAbs().maxCoeff() <= f.grid.step(0);
      }
      CHECK(found);
    }
  }
}

TEST_CASE("multistart is deterministic and its accounting exact") {
  const Event ev = generate_event(testing::velo_config(20, 31));
  const auto pts = ev.points();
  const VeloSurface surface(pts, 8.0);
  OptimizerConfig cfg = velo_optimizer(10);
  RandomStream a(5);
  RandomStream b(5);
  const auto ra = run_multistart(surface, cfg, a, true);
  const auto rb = run_multistart(surface, cfg, b, true);
  REQUIRE(ra.candidates.size() == rb.candidates.size());
  for (std::size_t k = 0; k < ra.candidates.size(); ++k) {
    CHECK(ra.candidates[k].params == rb.candidates[k].params);
    CHECK(ra.candidates[k].response == rb.candidates[k].response);
  }
  CHECK(ra.steps == 30);
  CHECK(ra.units(CostModel{3.0, 30.0}) == 900.0);
  CHECK(ra.inner.full_calls == 30);
  CHECK(ra.measured_step_cost({3.0, 30.0}) ==
        ra.inner.units(3.0) / 30.0);
  CHECK(ra.measured_step_cost({3.0, 30.0}) >= 3.0);
}

TEST_CASE("invalid optimizer settings are rejected") {
  const std::vector<SpacePoint> none;
  const VeloSurface surface(none, 8.0);
  RandomStream rng(1);
  OptimizerConfig cfg = velo_optimizer(0);
  CHECK_THROWS_AS(run_multistart(surface, cfg, rng), ConfigError);
  cfg = velo_optimizer(1);
  cfg.sigma_schedule = {0.3, -0.1};
  CHECK_THROWS_AS(run_multistart(surface, cfg, rng), ConfigError);
  cfg = velo_optimizer(1);
  cfg.sigma_schedule.clear();
  CHECK_THROWS_AS(run_multistart(surface, cfg, rng), ConfigError);
  cfg = velo_optimizer(1);
  cfg.prior = Prior::physical(3.0, 2.0);
  CHECK_THROWS_AS(run_multistart(surface, cfg, rng), ConfigError);
}
