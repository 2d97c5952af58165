#pragma once

#include "retina/candidate.hpp"
#include "retina/response.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace retina {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
};

/// Lattice of units. Nodes include both interval ends:
/// value_i = lo + i * (hi - lo) / (n - 1).
struct ParamGrid {
  std::array<Interval, 2> range{};
  std::array<int, 2> n{2, 2};

  double step(int axis) const;
  double coordinate(int axis, int index) const;
  Vector2 node(int i, int j) const { return {coordinate(0, i), coordinate(1, j)}; }
  std::uint64_t cell_count() const;

  /// Nodes spaced by (at most) `step` covering both ranges.
  static ParamGrid with_step(Interval first, Interval second, double step);
  static ParamGrid with_steps(Interval first, Interval second,
                              double first_step, double second_step);

  void validate() const;
};

struct ResponseGrid {
  ParamGrid grid;
  std::vector<double> values;  // row-major, i over axis 0

  double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) *
                      static_cast<std::size_t>(grid.n[1]) +
                  static_cast<std::size_t>(j)];
  }
};

struct GridPeak {
  GridCell cell;
  double value = 0.0;
};

/// R at every node. Adds one plain response evaluation per node to
/// `counter`. Rows are split over `jobs` threads.
ResponseGrid evaluate_grid(const ResponseSurface& surface,
                           const ParamGrid& grid, double sigma,
                           EvalCounter& counter, int jobs = 1);

/// Nodes strictly above all existing 8-neighbours and with value >= r0,
/// sorted by value descending (ties by i, then j).
std::vector<GridPeak> find_local_maxima(const ResponseGrid& rg, double r0);

/// Sub-cell peak position from a three-point parabola per axis. An axis at
/// the border, with non-negative curvature, or whose vertex leaves the cell
/// keeps the node value.
Vector2 estimate_track(const ResponseGrid& rg, const GridCell& cell);

/// ceil(range_0 / epsilon) * ceil(range_1 / epsilon); the quotients are
/// rounded to 1e-9 relative before taking the ceiling so that exact
/// multiples are not inflated by floating-point error.
std::uint64_t grid_cell_count_for_resolution(
    const std::array<Interval, 2>& ranges, double epsilon);

/// Steps (ii)-(iv): evaluate, find peaks, refine them into candidates.
std::vector<Candidate> run_grid_retina(const ResponseSurface& surface,
                                       const ParamGrid& grid, double sigma,
                                       double r0, EvalCounter& counter,
                                       int jobs = 1);

/// CSV with header `first,second,response`, one row per node.
void write_grid_csv(std::ostream& os, const ResponseGrid& rg);

}  // namespace retina
