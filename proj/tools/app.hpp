#pragma once

#include "defaults.hpp"

#include "retina/errors.hpp"
#include "retina/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace retina::app {

using Json = nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitAssertion = 1,
  kExitUsage = 2,
  kExitIo = 3,
};

/// Option values that are individually valid but do not fit together.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct GlobalOptions {
  std::uint64_t seed = defaults::kSeed;
  int jobs = 1;
  std::string format = "csv";
};

struct SimOptions {
  int layers = defaults::kLayers;
  double length = defaults::kLength;
  double r_inner = defaults::kRInner;
  double r_outer = defaults::kROuter;
  double eta_min = defaults::kEtaMin;
  double eta_max = defaults::kEtaMax;
  double p_hit = defaults::kPHit;
  int n_min = defaults::kNMin;
  double smear = defaults::kSmear;
  double noise_mean = defaults::kNoiseMean;
  std::string count = "generated";  // or "reconstructible"
};

SimConfig make_sim_config(const SimOptions& o, int n_tracks,
                          std::uint64_t seed);

struct MultistartOptions {
  double alpha = defaults::kAlpha;
  /// Overrides the budget when positive.
  std::int64_t n_seeds = 0;
  double full_cost = defaults::kFullCost;
  double step_cost = defaults::kStepCost;
  std::vector<double> sigma_schedule = defaults::kSigmaSchedule;
  double r0 = defaults::kR0;
  double cluster_radius = defaults::kClusterRadius;
  double resolution = defaults::kResolution;
  double cutoff = defaults::kCutoffSigmas;
};

struct GenerateOptions {
  std::string model = "svelo";
  /// Toy scene: fig1, fig2-small, fig2-mid or fig2-big.
  std::string fixture = "fig1";
  int tracks = defaults::kTracks;
  int events = defaults::kEvents;
  SimOptions sim;
  std::string out;
};

struct ReconstructOptions {
  std::string in;
  std::string out;
  std::string method = "multistart";
  MultistartOptions multistart;
  // Grid method and toy lattice. Zero, negative or empty means the model
  // default.
  double step = 0.0;
  double sigma = 0.0;
  double relative_threshold = -1.0;
  std::vector<double> first_range;
  std::vector<double> second_range;
};

struct EvaluateOptions {
  std::string corpus;
  std::string candidates;
  std::string out;
  double epsilon = defaults::kResolution;
  /// angle, per-parameter, or auto (angle for VELO, per-parameter for toy).
  std::string metric = "auto";
  /// Fail with kExitAssertion below this pooled efficiency; negative is off.
  double assert_efficiency = -1.0;
};

struct ExperimentOptions {
  std::vector<int> multiplicities = defaults::kMultiplicities;
  int events_per_point = defaults::kEventsPerPoint;
  std::vector<double> alphas = {defaults::kAlpha, 0.1};
  SimOptions sim;
  MultistartOptions multistart;
  double epsilon = defaults::kResolution;
  std::string metric = "angle";
  bool timing = false;
  std::string out;
};

struct FigureOptions {
  /// fig1, fig2-small, fig2-mid, fig2-big, fig3a or fig3b.
  std::string fixture;
  std::string out;
  // Efficiency curves only.
  std::vector<int> multiplicities = defaults::kMultiplicities;
  int events_per_point = defaults::kEventsPerPoint;
  bool timing = false;
};

/// What a command did, for the manifest.
struct RunRecord {
  /// Options after model defaults were filled in.
  Json options = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Json accounting = Json::object();
  /// False when outputs carry wall-clock times.
  bool reproducible = true;
  int exit_code = kExitOk;
};

// Each command writes its outputs, logs to `log` and returns the record.
// Library errors propagate; main() maps them to exit codes.
RunRecord run_generate(const GlobalOptions& g, const GenerateOptions& o,
                       std::ostream& log);
RunRecord run_reconstruct(const GlobalOptions& g, const ReconstructOptions& o,
                          std::ostream& log);
RunRecord run_evaluate(const GlobalOptions& g, const EvaluateOptions& o,
                       std::ostream& out, std::ostream& log);
RunRecord run_experiment_command(const GlobalOptions& g,
                                 const ExperimentOptions& o, std::ostream& log);
RunRecord run_figure(const GlobalOptions& g, const FigureOptions& o,
                     std::ostream& log);

/// Manifest of a finished command. Paths are recorded as given, with the
/// FNV-1a digest of every input and output file.
Json make_manifest(const std::string& subcommand, const GlobalOptions& g,
                   const RunRecord& record);
std::string manifest_path(const std::string& primary_output);
void write_manifest(const std::string& path, const Json& manifest);

/// Runs a subcommand from its resolved options, as recorded in a manifest,
/// and writes a fresh manifest next to the primary output.
RunRecord dispatch(const std::string& subcommand, const GlobalOptions& g,
                   const Json& options, std::ostream& out, std::ostream& log);

/// Re-executes a manifest. With a non-empty `output_dir` the outputs go there
/// (same file names) instead of the recorded paths. Inputs are checked
/// against their recorded digests first, outputs afterwards; any difference
/// throws IntegrityError.
RunRecord rerun(const std::string& manifest_file, const std::string& output_dir,
                std::ostream& out, std::ostream& log);

/// Hex FNV-1a 64 of the file contents.
std::string file_digest(const std::string& path);

// Option structs <-> JSON. Missing keys keep their defaults.
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GlobalOptions, seed, jobs,
                                                format)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimOptions, layers, length,
                                                r_inner, r_outer, eta_min,
                                                eta_max, p_hit, n_min, smear,
                                                noise_mean, count)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MultistartOptions, alpha,
                                                n_seeds, full_cost, step_cost,
                                                sigma_schedule, r0,
                                                cluster_radius, resolution,
                                                cutoff)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GenerateOptions, model,
                                                fixture, tracks, events, sim,
                                                out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReconstructOptions, in, out,
                                                method, multistart, step, sigma,
                                                relative_threshold, first_range,
                                                second_range)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvaluateOptions, corpus,
                                                candidates, out, epsilon,
                                                metric, assert_efficiency)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentOptions,
                                                multiplicities,
                                                events_per_point, alphas, sim,
                                                multistart, epsilon, metric,
                                                timing, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FigureOptions, fixture, out,
                                                multiplicities,
                                                events_per_point, timing)

}  // namespace retina::app
