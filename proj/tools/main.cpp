#include "app.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

using namespace retina::app;

void add_sim_flags(CLI::App* cmd, SimOptions& s) {
  cmd->add_option("--layers", s.layers, "Number of detector layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--length", s.length, "Extent of the layers along z [mm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--r-inner", s.r_inner, "Inner layer radius [mm]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--r-outer", s.r_outer, "Outer layer radius [mm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--eta-min", s.eta_min, "Lowest pseudo-rapidity")
      ->capture_default_str();
  cmd->add_option("--eta-max", s.eta_max, "Highest pseudo-rapidity")
      ->capture_default_str();
  cmd->add_option("--p-hit", s.p_hit, "Probability of a hit per crossed layer")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--n-min", s.n_min, "Hits needed for a reconstructible track")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--smear", s.smear, "Hit resolution in x and y [mm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--noise-mean", s.noise_mean, "Mean number of noise hits")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--count", s.count,
                  "Meaning of --tracks: generated particles or "
                  "reconstructible tracks")
      ->check(CLI::IsMember({"generated", "reconstructible"}))
      ->capture_default_str();
}

void add_multistart_flags(CLI::App* cmd, MultistartOptions& m,
                          bool with_seed_count) {
  if (with_seed_count) {
    cmd->add_option("--alpha", m.alpha,
                    "Fraction of the grid-search budget to spend")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--n-seeds", m.n_seeds,
                    "Number of starting points; overrides --alpha")
        ->check(CLI::PositiveNumber);
  }
  cmd->add_option("--c", m.full_cost,
                  "Cost of response, gradient and Hessian in response units")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--c0", m.step_cost,
                  "Cost of one optimizer step in response units")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sigma-schedule", m.sigma_schedule,
                  "Bandwidth of each optimizer step")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--r0", m.r0, "Response threshold for candidates")
      ->capture_default_str();
  cmd->add_option("--cluster-radius", m.cluster_radius,
                  "Radius for merging optimizer solutions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--resolution", m.resolution,
                  "Parameter resolution that defines the grid budget n_grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--cutoff", m.cutoff,
                  "Skip hits farther than this many sigma (0 disables)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Artificial retina track reconstruction for a simplified "
               "vertex detector"};
  app.set_version_flag("--version", std::string(retina::defaults::kToolVersion));
  app.set_config("--config", "", "TOML or INI file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--jobs,-j", g.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--format", g.format, "Format of result tables")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Simulate an event corpus");
  generate->add_option("--model", gen.model, "Event model")
      ->check(CLI::IsMember({"svelo", "toy"}))
      ->capture_default_str();
  generate->add_option("--fixture", gen.fixture, "Toy scene (toy model only)")
      ->check(CLI::IsMember({"fig1", "fig2-small", "fig2-mid", "fig2-big"}))
      ->capture_default_str();
  generate->add_option("--tracks", gen.tracks, "Tracks per event")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  generate->add_option("--events", gen.events, "Number of events")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_sim_flags(generate, gen.sim);
  generate->add_option("--out,-o", gen.out, "Corpus file")->required();

  ReconstructOptions rec;
  auto* reconstruct =
      app.add_subcommand("reconstruct", "Find track candidates in a corpus");
  reconstruct->add_option("--in,-i", rec.in, "Corpus file")->required();
  reconstruct->add_option("--out,-o", rec.out, "Candidates file")->required();
  reconstruct->add_option("--method", rec.method, "Reconstruction method")
      ->check(CLI::IsMember({"grid", "multistart"}))
      ->capture_default_str();
  add_multistart_flags(reconstruct, rec.multistart, true);
  reconstruct->add_option("--step", rec.step,
                          "Grid step (default: --resolution, or 0.01 for toy)")
      ->check(CLI::PositiveNumber);
  reconstruct->add_option("--sigma", rec.sigma,
                          "Grid bandwidth (default 0.05 mm, or 0.02 for toy)")
      ->check(CLI::PositiveNumber);
  reconstruct->add_option("--relative-threshold", rec.relative_threshold,
                          "Also require grid peaks to reach this fraction of "
                          "the largest response (default 0, or 0.7 for toy)")
      ->check(CLI::Range(0.0, 1.0));
  reconstruct->add_option("--first-range", rec.first_range,
                          "Range of theta (or toy angle): lo,hi")
      ->delimiter(',')
      ->expected(2);
  reconstruct->add_option("--second-range", rec.second_range,
                          "Range of phi (or toy offset): lo,hi")
      ->delimiter(',')
      ->expected(2);

  EvaluateOptions ev;
  auto* evaluate =
      app.add_subcommand("evaluate", "Match candidates to the true tracks");
  evaluate->add_option("--corpus", ev.corpus, "Corpus file")->required();
  evaluate->add_option("--candidates", ev.candidates, "Candidates file")
      ->required();
  evaluate->add_option("--out,-o", ev.out, "Per-event results table")
      ->required();
  evaluate->add_option("--epsilon", ev.epsilon, "Matching tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--metric", ev.metric,
                       "Matching distance (auto: angle for VELO events, "
                       "per-parameter for toy events)")
      ->check(CLI::IsMember({"auto", "angle", "per-parameter"}))
      ->capture_default_str();
  evaluate->add_option("--assert-efficiency", ev.assert_efficiency,
                       "Exit with status 1 below this efficiency")
      ->check(CLI::Range(0.0, 1.0));

  ExperimentOptions ex;
  auto* experiment = app.add_subcommand(
      "experiment", "Efficiency against track multiplicity and budget");
  experiment->add_option("--multiplicities", ex.multiplicities,
                         "Tracks per event at each point")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_option("--events-per-point", ex.events_per_point,
                         "Events at each point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_option("--alphas", ex.alphas, "Budget fractions")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_sim_flags(experiment, ex.sim);
  add_multistart_flags(experiment, ex.multistart, false);
  experiment->add_option("--epsilon", ex.epsilon, "Matching tolerance [rad]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_option("--metric", ex.metric, "Matching distance")
      ->check(CLI::IsMember({"angle", "per-parameter"}))
      ->capture_default_str();
  experiment->add_flag("--timing", ex.timing,
                       "Fill the wall_time column (makes output "
                       "machine-dependent)");
  experiment->add_option("--out,-o", ex.out, "Results table")->required();

  FigureOptions fig;
  auto* figure = app.add_subcommand("figure", "Data behind a figure");
  figure->add_option("fixture", fig.fixture, "Figure name")
      ->check(CLI::IsMember(
          {"fig1", "fig2-small", "fig2-mid", "fig2-big", "fig3a", "fig3b"}))
      ->required();
  figure->add_option("--out,-o", fig.out, "Data file")->required();
  figure->add_option("--multiplicities", fig.multiplicities,
                     "Tracks per event (fig3a, fig3b)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  figure->add_option("--events-per-point", fig.events_per_point,
                     "Events per point (fig3a, fig3b)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  figure->add_flag("--timing", fig.timing, "Fill the wall_time column");

  std::string manifest;
  std::string output_dir;
  auto* rerun_cmd =
      app.add_subcommand("rerun", "Repeat a run from its manifest and check "
                                  "that the outputs are identical");
  rerun_cmd->add_option("manifest", manifest, "Manifest file")->required();
  rerun_cmd->add_option("--output-dir", output_dir,
                        "Write outputs here instead of the recorded paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunRecord record;
    if (generate->parsed()) {
      record = dispatch("generate", g, gen, std::cout, std::cerr);
    } else if (reconstruct->parsed()) {
      record = dispatch("reconstruct", g, rec, std::cout, std::cerr);
    } else if (evaluate->parsed()) {
      record = dispatch("evaluate", g, ev, std::cout, std::cerr);
    } else if (experiment->parsed()) {
      record = dispatch("experiment", g, ex, std::cout, std::cerr);
    } else if (figure->parsed()) {
      record = dispatch("figure", g, fig, std::cout, std::cerr);
    } else {
      record = retina::app::rerun(manifest, output_dir, std::cout, std::cerr);
    }
    return record.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const retina::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const retina::InvalidInput& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
