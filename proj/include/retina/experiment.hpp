#pragma once

#include "retina/evaluation.hpp"
#include "retina/multistart.hpp"
#include "retina/simulator.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace retina {

/// Efficiency-versus-multiplicity scan of the multistart retina.
struct ExperimentSpec {
  std::vector<int> multiplicities;
  int events_per_point = 1;
  std::vector<double> alphas;
  std::uint64_t rng_seed = 0;
  /// Template; n_tracks and rng_seed are set per event.
  SimConfig sim;
  /// Template; n_seeds is set from the budget.
  OptimizerConfig optimizer;
  CostModel cost;
  std::uint64_t n_grid = 0;
  double epsilon = 0.0;
  MatchMetric metric = MatchMetric::kAngle;
  double cutoff_sigmas = 8.0;
  int jobs = 1;
};

struct ExperimentRow {
  int multiplicity = 0;
  double alpha = 0.0;
  std::uint64_t n_seeds = 0;
  double efficiency = 0.0;
  double error = 0.0;
  double ghost_rate = 0.0;
  double wall_time = 0.0;  // seconds, summed over events
  /// Accounted cost of one event (n_seeds * q * C0).
  double response_units = 0.0;
  /// Within alpha * n_grid up to the rounding of one seed.
  bool within_budget = true;
  int events = 0;
  std::uint64_t reconstructible = 0;
  std::uint64_t matched = 0;
  /// Inner evaluation cost per optimizer step, in response units.
  double measured_step_cost = 0.0;
};

/// Seed of event `index` at multiplicity `multiplicity`. Shared by all alphas
/// so that every alpha sees the same events.
std::uint64_t experiment_event_seed(std::uint64_t base, int multiplicity,
                                    int index);

/// Optimizer stream of an event. Shared by all alphas, so the seeds of a
/// smaller budget are a prefix of the seeds of a larger one.
std::uint64_t optimizer_seed(std::uint64_t event_seed);

/// Runs every (multiplicity, alpha) point. Rows are ordered by multiplicity,
/// then alpha, as given. An event that throws aborts the run with an Error
/// naming its seed.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec);

/// Header: multiplicity,alpha,n_seeds,efficiency,err,ghost_rate,wall_time,
/// response_units. wall_time is left empty unless `with_wall_time`.
void write_experiment_csv(std::ostream& os,
                          const std::vector<ExperimentRow>& rows,
                          bool with_wall_time);

}  // namespace retina
