#include "app.hpp"

#include "retina/event_io.hpp"
#include "retina/evaluation.hpp"
#include "retina/experiment.hpp"
#include "retina/grid_retina.hpp"
#include "retina/multistart.hpp"
#include "retina/parallel.hpp"
#include "retina/response.hpp"
#include "retina/toy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>

namespace retina::app {

namespace {

std::ofstream open_output(const std::string& path) {
  if (path.empty()) {
    throw UsageError("an output path is required");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  return os;
}

void finish_output(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) {
    throw IoError("failed writing '" + path + "'");
  }
}

bool json_format(const GlobalOptions& g) {
  if (g.format == "json") {
    return true;
  }
  if (g.format == "csv") {
    return false;
  }
  throw UsageError("--format must be json or csv, got '" + g.format + "'");
}

MatchMetric parse_metric(const std::string& name) {
  if (name == "angle") {
    return MatchMetric::kAngle;
  }
  if (name == "per-parameter") {
    return MatchMetric::kPerParameter;
  }
  throw UsageError("--metric must be angle or per-parameter, got '" + name +
                   "'");
}

ToyFixture toy_fixture(const std::string& name, std::uint64_t seed) {
  if (name == "fig1") {
    return fig1_fixture(seed);
  }
  if (name == "fig2-small") {
    return fig2_fixture(1e-3, seed);
  }
  if (name == "fig2-mid") {
    return fig2_fixture(1e-2, seed);
  }
  if (name == "fig2-big") {
    return fig2_fixture(1e-1, seed);
  }
  throw UsageError("unknown toy fixture '" + name + "'");
}

Interval parse_range(const std::vector<double>& v, const char* flag) {
  if (v.size() != 2 || !(v[0] < v[1])) {
    throw UsageError(fmt::format("{} needs two increasing values", flag));
  }
  return {v[0], v[1]};
}

std::array<Interval, 2> velo_ranges() {
  return {Interval{-defaults::kThetaMax, defaults::kThetaMax},
          Interval{-defaults::kPhiMax, defaults::kPhiMax}};
}

std::uint64_t velo_n_grid(double resolution) {
  return grid_cell_count_for_resolution(velo_ranges(), resolution);
}

// Fills model-dependent defaults in place.
void resolve(ReconstructOptions& o, EventModel model) {
  if (o.method != "grid" && o.method != "multistart") {
    throw UsageError("--method must be grid or multistart, got '" + o.method +
                     "'");
  }
  const bool toy = model == EventModel::kToy;
  if (o.first_range.empty()) {
    o.first_range = toy ? std::vector<double>{-defaults::kToyAngleMax,
                                              defaults::kToyAngleMax}
                        : std::vector<double>{-defaults::kThetaMax,
                                              defaults::kThetaMax};
  }
  if (o.second_range.empty()) {
    o.second_range = toy ? std::vector<double>{defaults::kToyOffsetLo,
                                               defaults::kToyOffsetHi}
                         : std::vector<double>{-defaults::kPhiMax,
                                               defaults::kPhiMax};
  }
  if (o.step == 0.0) {
    o.step = toy ? defaults::kToyStep : o.multistart.resolution;
  }
  if (o.sigma == 0.0) {
    o.sigma = toy ? defaults::kToySigma : defaults::kGridSigma;
  }
  if (o.relative_threshold < 0.0) {
    o.relative_threshold = toy ? defaults::kToyRelativeThreshold : 0.0;
  }
  parse_range(o.first_range, "--first-range");
  parse_range(o.second_range, "--second-range");
  if (!(o.step > 0.0) || !(o.sigma > 0.0)) {
    throw UsageError("--step and --sigma must be positive");
  }
  if (!(o.relative_threshold >= 0.0 && o.relative_threshold <= 1.0)) {
    throw UsageError("--relative-threshold must lie in [0, 1]");
  }
}

struct EventReco {
  std::vector<Candidate> candidates;
  double units = 0.0;
  double measured_step_cost = 0.0;
};

EventReco reconstruct_grid(const ResponseSurface& surface,
                           const ReconstructOptions& o) {
  const ParamGrid grid =
      ParamGrid::with_step(parse_range(o.first_range, "--first-range"),
                           parse_range(o.second_range, "--second-range"),
                           o.step);
  EvalCounter counter;
  const ResponseGrid rg = evaluate_grid(surface, grid, o.sigma, counter);
  double threshold = o.multistart.r0;
  if (o.relative_threshold > 0.0 && !rg.values.empty()) {
    threshold = std::max(threshold, o.relative_threshold *
                                        *std::max_element(rg.values.begin(),
                                                          rg.values.end()));
  }
  EventReco out;
  for (const GridPeak& peak : find_local_maxima(rg, threshold)) {
    Candidate c;
    c.params = estimate_track(rg, peak.cell);
    c.response = peak.value;
    c.cell = peak.cell;
    out.candidates.push_back(c);
  }
  out.units = counter.units(o.multistart.full_cost);
  return out;
}

void write_experiment_json(std::ostream& os,
                           const std::vector<ExperimentRow>& rows,
                           bool with_wall_time) {
  Json arr = Json::array();
  for (const ExperimentRow& r : rows) {
    Json j;
    j["multiplicity"] = r.multiplicity;
    j["alpha"] = r.alpha;
    j["n_seeds"] = r.n_seeds;
    j["efficiency"] = r.efficiency;
    j["err"] = r.error;
    j["ghost_rate"] = r.ghost_rate;
    j["wall_time"] = with_wall_time ? Json(r.wall_time) : Json(nullptr);
    j["response_units"] = r.response_units;
    j["within_budget"] = r.within_budget;
    j["events"] = r.events;
    j["reconstructible"] = r.reconstructible;
    j["matched"] = r.matched;
    j["measured_step_cost"] = r.measured_step_cost;
    arr.push_back(std::move(j));
  }
  os << arr.dump(2) << '\n';
}

RunRecord efficiency_scan(const GlobalOptions& g, const ExperimentOptions& o,
                          std::ostream& log) {
  const bool as_json = json_format(g);
  if (o.multiplicities.empty() || o.alphas.empty()) {
    throw UsageError("need at least one multiplicity and one alpha");
  }
  ExperimentSpec spec;
  spec.multiplicities = o.multiplicities;
  spec.events_per_point = o.events_per_point;
  spec.alphas = o.alphas;
  spec.rng_seed = g.seed;
  spec.sim = make_sim_config(o.sim, 0, 0);
  spec.optimizer.sigma_schedule = o.multistart.sigma_schedule;
  spec.optimizer.r0 = o.multistart.r0;
  spec.optimizer.cluster_radius = o.multistart.cluster_radius;
  spec.optimizer.prior = Prior::physical(o.sim.eta_min, o.sim.eta_max);
  spec.optimizer.validate();
  spec.cost = {o.multistart.full_cost, o.multistart.step_cost};
  spec.n_grid = velo_n_grid(o.multistart.resolution);
  spec.epsilon = o.epsilon;
  spec.metric = parse_metric(o.metric);
  spec.cutoff_sigmas = o.multistart.cutoff;
  spec.jobs = g.jobs;

  const std::vector<ExperimentRow> rows = run_experiment(spec);

  std::ofstream os = open_output(o.out);
  if (as_json) {
    write_experiment_json(os, rows, o.timing);
  } else {
    write_experiment_csv(os, rows, o.timing);
  }
  finish_output(os, o.out);

  RunRecord rec;
  rec.options = o;
  rec.outputs = {o.out};
  rec.reproducible = !o.timing;
  Json points = Json::array();
  bool all_within = true;
  for (const ExperimentRow& r : rows) {
    log << fmt::format(
        "multiplicity {:>4}  alpha {:.4f}  n_seeds {:>6}  efficiency "
        "{:.4f} +- {:.4f}  ghost rate {:.4f}\n",
        r.multiplicity, r.alpha, r.n_seeds, r.efficiency, r.error,
        r.ghost_rate);
    all_within = all_within && r.within_budget;
    points.push_back({{"multiplicity", r.multiplicity},
                      {"alpha", r.alpha},
                      {"n_seeds", r.n_seeds},
                      {"units_per_event", r.response_units},
                      {"allowance_per_event",
                       r.alpha * static_cast<double>(spec.n_grid)},
                      {"within_budget", r.within_budget},
                      {"measured_step_cost", r.measured_step_cost}});
  }
  rec.accounting = {{"n_grid", spec.n_grid},
                    {"q", spec.optimizer.q()},
                    {"C", spec.cost.full_cost},
                    {"C0", spec.cost.step_cost},
                    {"within_budget", all_within},
                    {"points", std::move(points)}};
  return rec;
}

RunRecord heat_map(const GlobalOptions& g, const FigureOptions& o,
                   std::ostream& log) {
  const bool as_json = json_format(g);
  const ToyFixture f = toy_fixture(o.fixture, g.seed);
  const ToyEvent ev = generate_toy_event(f.config);
  const std::vector<PlanarHit> points = ev.points();
  const ToySurface surface(points, RetinaConfig::kNoCutoff);
  EvalCounter counter;
  const ResponseGrid rg = evaluate_grid(surface, f.grid, f.sigma, counter,
                                        g.jobs);
  const double peak =
      *std::max_element(rg.values.begin(), rg.values.end());
  const std::vector<GridPeak> maxima =
      find_local_maxima(rg, f.relative_threshold * peak);

  Json found = Json::array();
  for (const GridPeak& m : maxima) {
    const Vector2 node = rg.grid.node(m.cell.i, m.cell.j);
    found.push_back({node[0], node[1], m.value});
  }
  Json truths = Json::array();
  for (const ToyTrack& t : ev.tracks) {
    truths.push_back({t.line.angle, t.line.offset});
  }

  std::ofstream os = open_output(o.out);
  if (as_json) {
    Json j;
    j["fixture"] = o.fixture;
    j["sigma"] = f.sigma;
    j["first"] = {rg.grid.range[0].lo, rg.grid.range[0].hi, rg.grid.n[0]};
    j["second"] = {rg.grid.range[1].lo, rg.grid.range[1].hi, rg.grid.n[1]};
    j["response"] = rg.values;
    j["maxima"] = found;
    j["tracks"] = truths;
    os << j.dump() << '\n';
  } else {
    write_grid_csv(os, rg);
  }
  finish_output(os, o.out);

  log << fmt::format("{}: sigma {}, {} local maxima above {:.3g} ({} of the "
                     "peak response {:.3g})\n",
                     o.fixture, f.sigma, maxima.size(),
                     f.relative_threshold * peak, f.relative_threshold, peak);
  RunRecord rec;
  rec.options = o;
  rec.outputs = {o.out};
  rec.accounting = {{"grid_cells", rg.grid.cell_count()},
                    {"response_units", counter.units(defaults::kFullCost)},
                    {"sigma", f.sigma},
                    {"local_maxima", maxima.size()},
                    {"maxima", found},
                    {"tracks", truths}};
  return rec;
}

std::string join_dir(const std::string& dir, const std::string& path) {
  return (std::filesystem::path(dir) / std::filesystem::path(path).filename())
      .string();
}

}  // namespace

SimConfig make_sim_config(const SimOptions& o, int n_tracks,
                          std::uint64_t seed) {
  if (o.layers < 1) {
    throw UsageError("--layers must be at least 1");
  }
  SimConfig c;
  c.n_tracks = n_tracks;
  if (o.count == "generated") {
    c.count_mode = TrackCount::kGenerated;
  } else if (o.count == "reconstructible") {
    c.count_mode = TrackCount::kReconstructible;
  } else {
    throw UsageError("--count must be generated or reconstructible, got '" +
                     o.count + "'");
  }
  c.geometry = DetectorGeometry::equally_spaced(
      static_cast<std::size_t>(o.layers), o.length, o.r_inner, o.r_outer);
  c.eta_min = o.eta_min;
  c.eta_max = o.eta_max;
  c.p_hit = o.p_hit;
  c.n_min = o.n_min;
  c.smear_sigma = o.smear;
  c.noise_mean = o.noise_mean;
  c.rng_seed = seed;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return c;
}

RunRecord run_generate(const GlobalOptions& g, const GenerateOptions& o,
                       std::ostream& log) {
  if (o.events < 0 || o.tracks < 0) {
    throw UsageError("--events and --tracks must be non-negative");
  }
  Corpus corpus;
  corpus.model = event_model_from_string(o.model);
  const auto n = static_cast<std::size_t>(o.events);
  std::size_t hits = 0;
  std::size_t tracks = 0;
  if (corpus.model == EventModel::kSvelo) {
    const SimConfig probe = make_sim_config(o.sim, o.tracks, 0);
    corpus.svelo.resize(n);
    parallel_for(n, g.jobs, [&](std::size_t i) {
      SimConfig c = probe;
      c.rng_seed = experiment_event_seed(g.seed, o.tracks, static_cast<int>(i));
      corpus.svelo[i] = generate_event(c);
    });
    for (const Event& ev : corpus.svelo) {
      hits += ev.hits.size();
      tracks += ev.true_tracks.size();
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const ToyFixture f = toy_fixture(
          o.fixture, experiment_event_seed(g.seed, 0, static_cast<int>(i)));
      corpus.toy.push_back(generate_toy_event(f.config));
      hits += corpus.toy.back().hits.size();
      tracks += corpus.toy.back().tracks.size();
    }
  }

  std::ofstream os = open_output(o.out);
  write_corpus(os, corpus);
  finish_output(os, o.out);
  log << fmt::format("wrote {} {} events ({} hits, {} reconstructible tracks) "
                     "to {}\n",
                     n, o.model, hits, tracks, o.out);

  RunRecord rec;
  GenerateOptions resolved = o;
  if (corpus.model == EventModel::kSvelo) {
    resolved.fixture.clear();
  }
  rec.options = resolved;
  rec.outputs = {o.out};
  rec.accounting = {{"events", n},
                    {"hits", hits},
                    {"reconstructible_tracks", tracks}};
  return rec;
}

RunRecord run_reconstruct(const GlobalOptions& g, const ReconstructOptions& opt,
                          std::ostream& log) {
  const Corpus corpus = read_corpus_file(opt.in);
  ReconstructOptions o = opt;
  resolve(o, corpus.model);
  const bool toy = corpus.model == EventModel::kToy;
  const MultistartOptions& ms = o.multistart;

  const std::array<Interval, 2> ranges = {
      parse_range(o.first_range, "--first-range"),
      parse_range(o.second_range, "--second-range")};
  const std::uint64_t n_grid =
      grid_cell_count_for_resolution(ranges, ms.resolution);

  OptimizerConfig opt_cfg;
  Budget budget;
  const bool multistart = o.method == "multistart";
  if (multistart) {
    opt_cfg.sigma_schedule = ms.sigma_schedule;
    opt_cfg.r0 = ms.r0;
    opt_cfg.cluster_radius = ms.cluster_radius;
    budget = compute_budget(ms.alpha, n_grid, opt_cfg.q(), ms.step_cost);
    const std::int64_t n_seeds =
        ms.n_seeds > 0 ? ms.n_seeds : static_cast<std::int64_t>(budget.n_seeds);
    if (n_seeds > std::numeric_limits<int>::max()) {
      throw UsageError("seed count too large");
    }
    opt_cfg.n_seeds = static_cast<int>(n_seeds);
    if (toy) {
      opt_cfg.prior = Prior::uniform_box(
          {{ranges[0].lo, ranges[1].lo}, {ranges[0].hi, ranges[1].hi}});
    }
    log << fmt::format(
        "n_seeds = {} (alpha {}, n_grid {}, C0 {}, q {}{})\n", opt_cfg.n_seeds,
        ms.alpha, n_grid, ms.step_cost, opt_cfg.q(),
        ms.n_seeds > 0 ? ", set explicitly" : "");
  }

  std::vector<EventReco> results(corpus.size());
  parallel_for(corpus.size(), g.jobs, [&](std::size_t i) {
    if (toy) {
      const std::vector<PlanarHit> points = corpus.toy[i].points();
      const ToySurface surface(points, ms.cutoff);
      if (!multistart) {
        results[i] = reconstruct_grid(surface, o);
        return;
      }
      RandomStream rng(optimizer_seed(corpus.seed(i)));
      const MultistartResult r = run_multistart(surface, opt_cfg, rng);
      results[i] = {r.candidates, r.units({ms.full_cost, ms.step_cost}),
                    r.measured_step_cost({ms.full_cost, ms.step_cost})};
      return;
    }
    const Event& ev = corpus.svelo[i];
    const std::vector<SpacePoint> points = ev.points();
    const VeloSurface surface(points, ms.cutoff);
    if (!multistart) {
      results[i] = reconstruct_grid(surface, o);
      return;
    }
    OptimizerConfig cfg = opt_cfg;
    cfg.prior = Prior::physical(ev.config.eta_min, ev.config.eta_max);
    RandomStream rng(optimizer_seed(corpus.seed(i)));
    const MultistartResult r = run_multistart(surface, cfg, rng);
    results[i] = {r.candidates, r.units({ms.full_cost, ms.step_cost}),
                  r.measured_step_cost({ms.full_cost, ms.step_cost})};
  });

  CandidateFile file;
  file.model = corpus.model;
  double units = 0.0;
  double measured = 0.0;
  std::size_t n_candidates = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    file.events.push_back({i, corpus.seed(i), results[i].candidates});
    units += results[i].units;
    measured += results[i].measured_step_cost;
    n_candidates += results[i].candidates.size();
  }
  std::ofstream os = open_output(o.out);
  write_candidates(os, file);
  finish_output(os, o.out);
  log << fmt::format("wrote {} candidates for {} events to {}\n", n_candidates,
                     results.size(), o.out);

  RunRecord rec;
  rec.options = o;
  rec.inputs = {o.in};
  rec.outputs = {o.out};
  const double events = static_cast<double>(results.size());
  rec.accounting = {{"method", o.method},
                    {"events", results.size()},
                    {"candidates", n_candidates},
                    {"n_grid", n_grid},
                    {"C", ms.full_cost},
                    {"response_units", units}};
  if (multistart) {
    rec.accounting["n_seeds"] = opt_cfg.n_seeds;
    rec.accounting["q"] = opt_cfg.q();
    rec.accounting["C0"] = ms.step_cost;
    rec.accounting["alpha"] = ms.alpha;
    rec.accounting["allowance"] = ms.alpha * static_cast<double>(n_grid) * events;
    rec.accounting["within_budget"] =
        units <= ms.alpha * static_cast<double>(n_grid) * events +
                     ms.step_cost * opt_cfg.q() * events;
    rec.accounting["measured_step_cost"] =
        results.empty() ? 0.0 : measured / events;
  }
  return rec;
}

RunRecord run_evaluate(const GlobalOptions& g, const EvaluateOptions& opt,
                       std::ostream& out, std::ostream& log) {
  const bool as_json = json_format(g);
  if (!(opt.epsilon > 0.0)) {
    throw UsageError("--epsilon must be positive");
  }
  const Corpus corpus = read_corpus_file(opt.corpus);
  CandidateFile cands;
  {
    std::ifstream is(opt.candidates, std::ios::binary);
    if (!is) {
      throw IoError("cannot open '" + opt.candidates + "' for reading");
    }
    cands = read_candidates(is);
  }
  if (cands.model != corpus.model) {
    throw IntegrityError("candidates were reconstructed from " +
                         to_string(cands.model) + " events, corpus holds " +
                         to_string(corpus.model) + " events");
  }
  if (cands.events.size() != corpus.size()) {
    throw IntegrityError(fmt::format(
        "candidates cover {} events, corpus holds {}", cands.events.size(),
        corpus.size()));
  }
  EvaluateOptions o = opt;
  if (o.metric == "auto") {
    o.metric = corpus.model == EventModel::kToy ? "per-parameter" : "angle";
  }
  const MatchMetric metric = parse_metric(o.metric);

  EfficiencyTally tally;
  std::vector<MatchReport> reports;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const EventCandidates& ec = cands.events[i];
    if (ec.event != i || ec.seed != corpus.seed(i)) {
      throw IntegrityError(fmt::format(
          "candidate record {} (event {}, seed {}) does not match corpus event "
          "{} (seed {})",
          i, ec.event, ec.seed, i, corpus.seed(i)));
    }
    std::vector<TrueTrack> truths;
    if (corpus.model == EventModel::kSvelo) {
      truths = corpus.svelo[i].true_tracks;
    } else {
      for (const ToyTrack& t : corpus.toy[i].tracks) {
        truths.push_back({t.id, {t.line.angle, t.line.offset}, t.n_hits});
      }
    }
    reports.push_back(
        match_candidates(ec.candidates, truths, o.epsilon, metric));
    tally.add(reports.back());
  }

  std::ofstream os = open_output(o.out);
  if (as_json) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const MatchReport& r = reports[i];
      arr.push_back({{"event", i},
                     {"seed", corpus.seed(i)},
                     {"reconstructible", r.n_reconstructible},
                     {"matched", r.matched.size()},
                     {"missed", r.missed_ids},
                     {"ghosts", r.ghosts.size()},
                     {"candidates", r.n_candidates},
                     {"efficiency", r.efficiency()}});
    }
    os << Json{{"events", arr},
               {"efficiency", tally.efficiency()},
               {"err", tally.error()},
               {"ghost_rate", tally.ghost_rate()}}
              .dump(2)
       << '\n';
  } else {
    os << "event,seed,reconstructible,matched,ghosts,candidates,efficiency\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const MatchReport& r = reports[i];
      os << fmt::format("{},{},{},{},{},{},{}\n", i, corpus.seed(i),
                        r.n_reconstructible, r.matched.size(), r.ghosts.size(),
                        r.n_candidates, r.efficiency());
    }
  }
  finish_output(os, o.out);

  out << fmt::format(
      "efficiency {:.4f} +- {:.4f} ({} of {} reconstructible tracks), ghost "
      "rate {:.4f} ({} of {} candidates), {} events\n",
      tally.efficiency(), tally.error(), tally.matched, tally.reconstructible,
      tally.ghost_rate(), tally.ghosts, tally.candidates, reports.size());

  RunRecord rec;
  rec.options = o;
  rec.inputs = {o.corpus, o.candidates};
  rec.outputs = {o.out};
  rec.accounting = {{"efficiency", tally.efficiency()},
                    {"err", tally.error()},
                    {"ghost_rate", tally.ghost_rate()},
                    {"matched", tally.matched},
                    {"reconstructible", tally.reconstructible}};
  if (o.assert_efficiency >= 0.0 && tally.efficiency() < o.assert_efficiency) {
    log << fmt::format("efficiency {:.4f} is below the asserted {:.4f}\n",
                       tally.efficiency(), o.assert_efficiency);
    rec.exit_code = kExitAssertion;
  }
  return rec;
}

RunRecord run_experiment_command(const GlobalOptions& g,
                                 const ExperimentOptions& o,
                                 std::ostream& log) {
  return efficiency_scan(g, o, log);
}

RunRecord run_figure(const GlobalOptions& g, const FigureOptions& o,
                     std::ostream& log) {
  if (o.fixture == "fig3a" || o.fixture == "fig3b") {
    ExperimentOptions e;
    e.multiplicities = o.multiplicities;
    e.events_per_point = o.events_per_point;
    e.alphas = {o.fixture == "fig3a" ? defaults::kAlpha : 0.1};
    e.timing = o.timing;
    e.out = o.out;
    RunRecord rec = efficiency_scan(g, e, log);
    rec.options = o;
    return rec;
  }
  return heat_map(g, o, log);
}

std::string file_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(is), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

Json make_manifest(const std::string& subcommand, const GlobalOptions& g,
                   const RunRecord& record) {
  auto files = [](const std::vector<std::string>& paths) {
    Json arr = Json::array();
    for (const std::string& p : paths) {
      arr.push_back({{"path", p}, {"digest", file_digest(p)}});
    }
    return arr;
  };
  Json m;
  m["tool"] = "retina";
  m["version"] = defaults::kToolVersion;
  m["subcommand"] = subcommand;
  m["global"] = g;
  m["options"] = record.options;
  m["inputs"] = files(record.inputs);
  m["outputs"] = files(record.outputs);
  m["accounting"] = record.accounting;
  m["reproducible"] = record.reproducible;
  return m;
}

std::string manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

void write_manifest(const std::string& path, const Json& manifest) {
  std::ofstream os = open_output(path);
  os << manifest.dump(2) << '\n';
  finish_output(os, path);
}

RunRecord dispatch(const std::string& subcommand, const GlobalOptions& g,
                   const Json& options, std::ostream& out, std::ostream& log) {
  if (g.jobs < 1) {
    throw UsageError("--jobs must be at least 1");
  }
  RunRecord rec;
  if (subcommand == "generate") {
    rec = run_generate(g, options.get<GenerateOptions>(), log);
  } else if (subcommand == "reconstruct") {
    rec = run_reconstruct(g, options.get<ReconstructOptions>(), log);
  } else if (subcommand == "evaluate") {
    rec = run_evaluate(g, options.get<EvaluateOptions>(), out, log);
  } else if (subcommand == "experiment") {
    rec = run_experiment_command(g, options.get<ExperimentOptions>(), log);
  } else if (subcommand == "figure") {
    rec = run_figure(g, options.get<FigureOptions>(), log);
  } else {
    throw UsageError("unknown subcommand '" + subcommand + "'");
  }
  write_manifest(manifest_path(rec.outputs.front()),
                 make_manifest(subcommand, g, rec));
  return rec;
}

RunRecord rerun(const std::string& manifest_file, const std::string& output_dir,
                std::ostream& out, std::ostream& log) {
  Json m;
  {
    std::ifstream is(manifest_file, std::ios::binary);
    if (!is) {
      throw IoError("cannot open '" + manifest_file + "' for reading");
    }
    try {
      m = Json::parse(is);
    } catch (const Json::exception& e) {
      throw ParseError(0, "", std::string("manifest: ") + e.what());
    }
  }
  try {
    if (m.at("tool") != "retina") {
      throw ParseError(0, "tool", "not a retina manifest");
    }
    for (const Json& in : m.at("inputs")) {
      const std::string path = in.at("path");
      if (file_digest(path) != in.at("digest").get<std::string>()) {
        throw IntegrityError("input '" + path +
                             "' changed since the manifest was written");
      }
    }
    const std::string subcommand = m.at("subcommand");
    const GlobalOptions g = m.at("global").get<GlobalOptions>();
    Json options = m.at("options");
    std::vector<std::string> expected_paths;
    std::vector<std::string> expected_digests;
    for (const Json& o : m.at("outputs")) {
      expected_paths.push_back(o.at("path"));
      expected_digests.push_back(o.at("digest"));
    }
    if (!output_dir.empty()) {
      std::filesystem::create_directories(output_dir);
      options["out"] = join_dir(output_dir, options.at("out"));
      for (std::string& p : expected_paths) {
        p = join_dir(output_dir, p);
      }
    }

    RunRecord rec = dispatch(subcommand, g, options, out, log);
    if (!m.at("reproducible").get<bool>()) {
      log << "outputs carry wall-clock times; byte comparison skipped\n";
      return rec;
    }
    if (rec.outputs != expected_paths) {
      throw IntegrityError("rerun wrote a different set of outputs");
    }
    for (std::size_t i = 0; i < expected_paths.size(); ++i) {
      if (file_digest(expected_paths[i]) != expected_digests[i]) {
        throw IntegrityError("output '" + expected_paths[i] +
                             "' differs from the recorded run");
      }
    }
    log << fmt::format("reproduced {} output(s) byte for byte\n",
                       expected_paths.size());
    return rec;
  } catch (const Json::exception& e) {
    throw ParseError(0, "", std::string("manifest: ") + e.what());
  }
}

}  // namespace retina::app
