#include "retina/experiment.hpp"

#include "retina/errors.hpp"
#include "retina/parallel.hpp"
#include "retina/response.hpp"

#include <chrono>
#include <fmt/format.h>
#include <ostream>

namespace retina {

std::uint64_t experiment_event_seed(std::uint64_t base, int multiplicity,
                                    int index) {
  return derive_seed(base, {kEventStream, static_cast<std::uint64_t>(multiplicity),
                            static_cast<std::uint64_t>(index)});
}

std::uint64_t optimizer_seed(std::uint64_t event_seed) {
  return derive_seed(event_seed, {kSeedStream});
}

namespace {

struct EventOutcome {
  MatchReport report;
  double wall_time = 0.0;
  double measured_step_cost = 0.0;
};

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec) {
  if (spec.multiplicities.empty() || spec.alphas.empty() ||
      spec.events_per_point < 1) {
    throw ConfigError("experiment: empty multiplicity or alpha list");
  }
  spec.optimizer.prior.validate();

  struct Task {
    std::size_t row;
    int multiplicity;
    int index;
    Budget budget;
  };
  std::vector<ExperimentRow> rows;
  std::vector<Task> tasks;
  for (const int m : spec.multiplicities) {
    for (const double alpha : spec.alphas) {
      const Budget budget = compute_budget(alpha, spec.n_grid,
                                           spec.optimizer.q(),
                                           spec.cost.step_cost);
      ExperimentRow row;
      row.multiplicity = m;
      row.alpha = alpha;
      row.n_seeds = budget.n_seeds;
      row.response_units = budget.units();
      row.within_budget =
          budget.units() <=
          budget.allowance() + spec.cost.step_cost * spec.optimizer.q();
      rows.push_back(row);
      for (int e = 0; e < spec.events_per_point; ++e) {
        tasks.push_back({rows.size() - 1, m, e, budget});
      }
    }
  }

  std::vector<EventOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), spec.jobs, [&](std::size_t k) {
    const Task& task = tasks[k];
    const std::uint64_t seed =
        experiment_event_seed(spec.rng_seed, task.multiplicity, task.index);
    try {
      SimConfig sim = spec.sim;
      sim.n_tracks = task.multiplicity;
      sim.rng_seed = seed;
      const Event event = generate_event(sim);
      const std::vector<SpacePoint> points = event.points();

      const auto t0 = std::chrono::steady_clock::now();
      const VeloSurface surface(points, spec.cutoff_sigmas);
      OptimizerConfig opt = spec.optimizer;
      opt.n_seeds = static_cast<int>(task.budget.n_seeds);
      RandomStream rng(optimizer_seed(seed));
      const MultistartResult result = run_multistart(surface, opt, rng);
      const auto t1 = std::chrono::steady_clock::now();

      outcomes[k].report = match_candidates(result.candidates, event.true_tracks,
                                            spec.epsilon, spec.metric);
      outcomes[k].wall_time = std::chrono::duration<double>(t1 - t0).count();
      outcomes[k].measured_step_cost = result.measured_step_cost(spec.cost);
    } catch (const std::exception& ex) {
      throw Error(fmt::format("experiment: event seed {} (multiplicity {}, "
                              "index {}) failed: {}",
                              seed, task.multiplicity, task.index, ex.what()));
    }
  });

  std::vector<EfficiencyTally> tallies(rows.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    ExperimentRow& row = rows[tasks[k].row];
    tallies[tasks[k].row].add(outcomes[k].report);
    row.wall_time += outcomes[k].wall_time;
    row.measured_step_cost += outcomes[k].measured_step_cost;
    ++row.events;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].efficiency = tallies[r].efficiency();
    rows[r].error = tallies[r].error();
    rows[r].ghost_rate = tallies[r].ghost_rate();
    rows[r].reconstructible = tallies[r].reconstructible;
    rows[r].matched = tallies[r].matched;
    rows[r].measured_step_cost /= static_cast<double>(rows[r].events);
  }
  return rows;
}

void write_experiment_csv(std::ostream& os,
                          const std::vector<ExperimentRow>& rows,
                          bool with_wall_time) {
  os << "multiplicity,alpha,n_seeds,efficiency,err,ghost_rate,wall_time,"
        "response_units\n";
  for (const ExperimentRow& r : rows) {
    os << fmt::format("{},{},{},{},{},{},{},{}\n", r.multiplicity, r.alpha,
                      r.n_seeds, r.efficiency, r.error, r.ghost_rate,
                      with_wall_time ? fmt::format("{}", r.wall_time) : "",
                      r.response_units);
  }
}

}  // namespace retina
