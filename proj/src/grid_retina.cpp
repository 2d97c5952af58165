#include "retina/grid_retina.hpp"

#include "retina/errors.hpp"
#include "retina/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

namespace retina {

double ParamGrid::step(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return range[a].length() / static_cast<double>(n[a] - 1);
}

double ParamGrid::coordinate(int axis, int index) const {
  const auto a = static_cast<std::size_t>(axis);
  if (index == n[a] - 1) {
    return range[a].hi;
  }
  return range[a].lo + static_cast<double>(index) * step(axis);
}

std::uint64_t ParamGrid::cell_count() const {
  return static_cast<std::uint64_t>(n[0]) * static_cast<std::uint64_t>(n[1]);
}

ParamGrid ParamGrid::with_step(Interval first, Interval second, double step) {
  return with_steps(first, second, step, step);
}

ParamGrid ParamGrid::with_steps(Interval first, Interval second,
                                double first_step, double second_step) {
  if (!(first_step > 0.0) || !(second_step > 0.0)) {
    throw InvalidInput("grid step must be positive");
  }
  ParamGrid g;
  g.range = {first, second};
  const double steps[2] = {first_step, second_step};
  for (std::size_t a = 0; a < 2; ++a) {
    const double cells =
        std::ceil(g.range[a].length() / steps[a] * (1.0 - 1e-9));
    g.n[a] = std::max(2, static_cast<int>(cells) + 1);
  }
  g.validate();
  return g;
}

void ParamGrid::validate() const {
  for (std::size_t a = 0; a < 2; ++a) {
    if (n[a] < 2) {
      throw InvalidInput("grid needs at least two nodes per axis");
    }
    if (!(range[a].hi > range[a].lo)) {
      throw InvalidInput("grid range is degenerate");
    }
  }
}

ResponseGrid evaluate_grid(const ResponseSurface& surface,
                           const ParamGrid& grid, double sigma,
                           EvalCounter& counter, int jobs) {
  grid.validate();
  ResponseGrid rg{grid, std::vector<double>(grid.cell_count(), 0.0)};
  const auto rows = static_cast<std::size_t>(grid.n[0]);
  const auto cols = static_cast<std::size_t>(grid.n[1]);
  parallel_for(rows, jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols; ++j) {
      rg.values[i * cols + j] = surface.value(
          grid.node(static_cast<int>(i), static_cast<int>(j)), sigma);
    }
  });
  counter.response_calls += grid.cell_count();
  return rg;
}

std::vector<GridPeak> find_local_maxima(const ResponseGrid& rg, double r0) {
  const int n0 = rg.grid.n[0];
  const int n1 = rg.grid.n[1];
  std::vector<GridPeak> peaks;
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      const double v = rg.at(i, j);
      if (!(v >= r0)) {
        continue;
      }
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di;
          const int b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= n0 || b >= n1) {
            continue;
          }
          if (!(v > rg.at(a, b))) {
            strict = false;
            break;
          }
        }
      }
      if (strict) {
        peaks.push_back({{i, j}, v});
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const GridPeak& a, const GridPeak& b) {
                     return a.value > b.value;
                   });
  return peaks;
}

Vector2 estimate_track(const ResponseGrid& rg, const GridCell& cell) {
  Vector2 out = rg.grid.node(cell.i, cell.j);
  const std::array<int, 2> idx{cell.i, cell.j};
  for (int axis = 0; axis < 2; ++axis) {
    const int k = idx[static_cast<std::size_t>(axis)];
    if (k <= 0 || k >= rg.grid.n[static_cast<std::size_t>(axis)] - 1) {
      continue;
    }
    const double fm = axis == 0 ? rg.at(k - 1, cell.j) : rg.at(cell.i, k - 1);
    const double f0 = rg.at(cell.i, cell.j);
    const double fp = axis == 0 ? rg.at(k + 1, cell.j) : rg.at(cell.i, k + 1);
    const double curvature = fm - 2.0 * f0 + fp;
    if (!(curvature < 0.0)) {
      continue;
    }
    const double shift = 0.5 * (fm - fp) / curvature;
    if (std::abs(shift) > 0.5) {
      continue;
    }
    out[axis] += shift * rg.grid.step(axis);
  }
  return out;
}

std::uint64_t grid_cell_count_for_resolution(
    const std::array<Interval, 2>& ranges, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw InvalidInput("epsilon must be positive");
  }
  std::uint64_t total = 1;
  for (const Interval& r : ranges) {
    if (!(r.length() > 0.0)) {
      throw InvalidInput("range is degenerate");
    }
    const double q = r.length() / epsilon;
    const double nearest = std::round(q);
    const double cells =
        std::abs(q - nearest) <= 1e-9 * nearest ? nearest : std::ceil(q);
    total *= static_cast<std::uint64_t>(std::max(1.0, cells));
  }
  return total;
}

std::vector<Candidate> run_grid_retina(const ResponseSurface& surface,
                                       const ParamGrid& grid, double sigma,
                                       double r0, EvalCounter& counter,
                                       int jobs) {
  const ResponseGrid rg = evaluate_grid(surface, grid, sigma, counter, jobs);
  std::vector<Candidate> out;
  for (const GridPeak& peak : find_local_maxima(rg, r0)) {
    out.push_back(
        {estimate_track(rg, peak.cell), peak.value, 1, -1, peak.cell});
  }
  return out;
}

void write_grid_csv(std::ostream& os, const ResponseGrid& rg) {
  os << "first,second,response\n";
  for (int i = 0; i < rg.grid.n[0]; ++i) {
    for (int j = 0; j < rg.grid.n[1]; ++j) {
      const Vector2 p = rg.grid.node(i, j);
      os << fmt::format("{},{},{}\n", p[0], p[1], rg.at(i, j));
    }
  }
}

}  // namespace retina
