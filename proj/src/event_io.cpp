#include "retina/event_io.hpp"

#include "retina/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>

namespace retina {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr const char* kEventsFormat = "retina-events";
constexpr const char* kCandidatesFormat = "retina-candidates";

// Field access with line/field context on every failure.

const json& field(const json& obj, const std::string& name, std::size_t line,
                  const std::string& prefix = "") {
  if (!obj.is_object()) {
    throw ParseError(line, prefix, "expected an object");
  }
  const auto it = obj.find(name);
  if (it == obj.end()) {
    throw ParseError(line, prefix + name, "missing field");
  }
  return *it;
}

double get_double(const json& v, std::size_t line, const std::string& path) {
  if (!v.is_number()) {
    throw ParseError(line, path, "expected a number");
  }
  return v.get<double>();
}

int get_int(const json& v, std::size_t line, const std::string& path) {
  if (!v.is_number_integer()) {
    throw ParseError(line, path, "expected an integer");
  }
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() ||
      x > std::numeric_limits<int>::max()) {
    throw ParseError(line, path, "integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t get_u64(const json& v, std::size_t line,
                      const std::string& path) {
  if (v.is_number_unsigned()) {
    return v.get<std::uint64_t>();
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ParseError(line, path, "expected a non-negative integer");
}

std::string get_string(const json& v, std::size_t line,
                       const std::string& path) {
  if (!v.is_string()) {
    throw ParseError(line, path, "expected a string");
  }
  return v.get<std::string>();
}

const json& get_array(const json& v, std::size_t line, const std::string& path,
                      std::size_t size = 0) {
  if (!v.is_array()) {
    throw ParseError(line, path, "expected an array");
  }
  if (size != 0 && v.size() != size) {
    throw ParseError(line, path,
                     "expected " + std::to_string(size) + " elements");
  }
  return v;
}

json parse_line(std::string_view record, std::size_t line) {
  try {
    return json::parse(record);
  } catch (const json::parse_error& e) {
    throw ParseError(line, "", std::string("invalid JSON: ") + e.what());
  }
}

std::string indexed(const char* name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}

const char* count_mode_name(TrackCount mode) {
  return mode == TrackCount::kGenerated ? "generated" : "reconstructible";
}

ojson config_json(const SimConfig& c) {
  ojson j;
  j["n_tracks"] = c.n_tracks;
  j["count_mode"] = count_mode_name(c.count_mode);
  j["layer_z"] = c.geometry.layer_z;
  j["r_inner"] = c.geometry.r_inner;
  j["r_outer"] = c.geometry.r_outer;
  j["eta_min"] = c.eta_min;
  j["eta_max"] = c.eta_max;
  j["p_hit"] = c.p_hit;
  j["n_min"] = c.n_min;
  j["smear_sigma"] = c.smear_sigma;
  j["noise_mean"] = c.noise_mean;
  j["rng_seed"] = c.rng_seed;
  return j;
}

SimConfig config_from_json(const json& j, std::size_t line) {
  const std::string p = "config.";
  SimConfig c;
  c.n_tracks = get_int(field(j, "n_tracks", line, p), line, p + "n_tracks");
  const std::string mode =
      get_string(field(j, "count_mode", line, p), line, p + "count_mode");
  if (mode == "generated") {
    c.count_mode = TrackCount::kGenerated;
  } else if (mode == "reconstructible") {
    c.count_mode = TrackCount::kReconstructible;
  } else {
    throw ParseError(line, p + "count_mode", "unknown mode '" + mode + "'");
  }
  const json& zs = get_array(field(j, "layer_z", line, p), line, p + "layer_z");
  for (std::size_t k = 0; k < zs.size(); ++k) {
    c.geometry.layer_z.push_back(get_double(zs[k], line, p + indexed("layer_z", k)));
  }
  c.geometry.r_inner = get_double(field(j, "r_inner", line, p), line, p + "r_inner");
  c.geometry.r_outer = get_double(field(j, "r_outer", line, p), line, p + "r_outer");
  c.eta_min = get_double(field(j, "eta_min", line, p), line, p + "eta_min");
  c.eta_max = get_double(field(j, "eta_max", line, p), line, p + "eta_max");
  c.p_hit = get_double(field(j, "p_hit", line, p), line, p + "p_hit");
  c.n_min = get_int(field(j, "n_min", line, p), line, p + "n_min");
  c.smear_sigma = get_double(field(j, "smear_sigma", line, p), line, p + "smear_sigma");
  c.noise_mean = get_double(field(j, "noise_mean", line, p), line, p + "noise_mean");
  c.rng_seed = get_u64(field(j, "rng_seed", line, p), line, p + "rng_seed");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(line, "config", e.what());
  }
  return c;
}

ojson toy_config_json(const ToyConfig& c) {
  ojson j;
  j["n_planes"] = c.n_planes;
  j["first_plane_y"] = c.first_plane_y;
  j["plane_spacing"] = c.plane_spacing;
  ojson tracks = ojson::array();
  for (const auto& t : c.tracks) {
    tracks.push_back({t.angle, t.offset});
  }
  j["tracks"] = std::move(tracks);
  j["smear_sigma"] = c.smear_sigma;
  j["noise_hits"] = c.noise_hits;
  j["noise_x"] = {c.noise_x.lo, c.noise_x.hi};
  j["rng_seed"] = c.rng_seed;
  return j;
}

ToyConfig toy_config_from_json(const json& j, std::size_t line) {
  const std::string p = "config.";
  ToyConfig c;
  c.n_planes = get_int(field(j, "n_planes", line, p), line, p + "n_planes");
  c.first_plane_y =
      get_double(field(j, "first_plane_y", line, p), line, p + "first_plane_y");
  c.plane_spacing =
      get_double(field(j, "plane_spacing", line, p), line, p + "plane_spacing");
  const json& tracks = get_array(field(j, "tracks", line, p), line, p + "tracks");
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const std::string path = p + indexed("tracks", k);
    const json& t = get_array(tracks[k], line, path, 2);
    c.tracks.push_back({get_double(t[0], line, path), get_double(t[1], line, path)});
  }
  c.smear_sigma = get_double(field(j, "smear_sigma", line, p), line, p + "smear_sigma");
  c.noise_hits = get_int(field(j, "noise_hits", line, p), line, p + "noise_hits");
  const json& nx = get_array(field(j, "noise_x", line, p), line, p + "noise_x", 2);
  c.noise_x = {get_double(nx[0], line, p + "noise_x"),
               get_double(nx[1], line, p + "noise_x")};
  c.rng_seed = get_u64(field(j, "rng_seed", line, p), line, p + "rng_seed");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(line, "config", e.what());
  }
  return c;
}

std::optional<int> truth_from(int v, std::size_t line, const std::string& path) {
  if (v == -1) {
    return std::nullopt;
  }
  if (v < 0) {
    throw ParseError(line, path, "truth must be a track id or -1");
  }
  return v;
}

void check_version(const json& j, std::size_t line) {
  const int v = get_int(field(j, "format_version", line), line, "format_version");
  if (v != kCorpusFormatVersion) {
    throw ParseError(line, "format_version",
                     "unsupported version " + std::to_string(v));
  }
}

std::uint64_t check_seed(const json& j, std::uint64_t config_seed,
                         std::size_t line) {
  const std::uint64_t seed = get_u64(field(j, "seed", line), line, "seed");
  if (seed != config_seed) {
    throw ParseError(line, "seed", "does not match config.rng_seed");
  }
  return seed;
}

template <class Ids>
void check_truth_ids(const Ids& ids, int truth, std::size_t line,
                     const std::string& path) {
  if (std::find(ids.begin(), ids.end(), truth) == ids.end()) {
    throw ParseError(line, path,
                     "truth " + std::to_string(truth) + " names no true track");
  }
}

EventModel read_header(const json& j, const char* format, std::size_t line) {
  const std::string name = get_string(field(j, "format", line), line, "format");
  if (name != format) {
    throw ParseError(line, "format",
                     "expected '" + std::string(format) + "', got '" + name + "'");
  }
  check_version(j, line);
  const std::string model = get_string(field(j, "model", line), line, "model");
  try {
    return event_model_from_string(model);
  } catch (const InvalidInput& e) {
    throw ParseError(line, "model", e.what());
  }
}

std::string header_line(const char* format, EventModel model) {
  ojson h;
  h["format"] = format;
  h["format_version"] = kCorpusFormatVersion;
  h["model"] = to_string(model);
  return h.dump();
}

// Returns false at end of input. Blank lines are skipped.
bool next_line(std::istream& is, std::string& out, std::size_t& line_no) {
  while (std::getline(is, out)) {
    ++line_no;
    if (out.find_first_not_of(" \t\r") != std::string::npos) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string to_string(EventModel model) {
  return model == EventModel::kSvelo ? "svelo" : "toy";
}

EventModel event_model_from_string(std::string_view name) {
  if (name == "svelo") {
    return EventModel::kSvelo;
  }
  if (name == "toy") {
    return EventModel::kToy;
  }
  throw InvalidInput("unknown event model '" + std::string(name) + "'");
}

std::uint64_t Corpus::seed(std::size_t index) const {
  return model == EventModel::kSvelo ? svelo.at(index).config.rng_seed
                                     : toy.at(index).config.rng_seed;
}

std::string serialize_event(const Event& event) {
  ojson j;
  j["format_version"] = kCorpusFormatVersion;
  j["seed"] = event.config.rng_seed;
  j["config"] = config_json(event.config);
  ojson hits = ojson::array();
  for (const auto& h : event.hits) {
    hits.push_back({h.point.x, h.point.y, h.point.z, h.point.layer,
                    h.track_id.value_or(-1)});
  }
  j["hits"] = std::move(hits);
  ojson tracks = ojson::array();
  for (const auto& t : event.true_tracks) {
    tracks.push_back({t.id, t.params.theta, t.params.phi, t.n_hits});
  }
  j["true_tracks"] = std::move(tracks);
  return j.dump();
}

std::string serialize_event(const ToyEvent& event) {
  ojson j;
  j["format_version"] = kCorpusFormatVersion;
  j["seed"] = event.config.rng_seed;
  j["config"] = toy_config_json(event.config);
  ojson hits = ojson::array();
  for (const auto& h : event.hits) {
    hits.push_back({h.point.x, h.point.y, h.point.plane, h.track_id.value_or(-1)});
  }
  j["hits"] = std::move(hits);
  ojson tracks = ojson::array();
  for (const auto& t : event.tracks) {
    tracks.push_back({t.id, t.line.angle, t.line.offset, t.n_hits});
  }
  j["true_tracks"] = std::move(tracks);
  return j.dump();
}

Event deserialize_event(std::string_view record, std::size_t line) {
  const json j = parse_line(record, line);
  check_version(j, line);
  Event ev;
  ev.config = config_from_json(field(j, "config", line), line);
  check_seed(j, ev.config.rng_seed, line);

  const json& tracks = get_array(field(j, "true_tracks", line), line, "true_tracks");
  std::vector<int> ids;
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const std::string path = indexed("true_tracks", k);
    const json& t = get_array(tracks[k], line, path, 4);
    TrueTrack tt;
    tt.id = get_int(t[0], line, path);
    tt.params = {get_double(t[1], line, path), get_double(t[2], line, path)};
    tt.n_hits = get_int(t[3], line, path);
    ids.push_back(tt.id);
    ev.true_tracks.push_back(tt);
  }

  const json& hits = get_array(field(j, "hits", line), line, "hits");
  ev.hits.reserve(hits.size());
  const int n_layers = static_cast<int>(ev.config.geometry.n_layers());
  for (std::size_t k = 0; k < hits.size(); ++k) {
    const std::string path = indexed("hits", k);
    const json& h = get_array(hits[k], line, path, 5);
    Hit hit;
    hit.point = {get_double(h[0], line, path), get_double(h[1], line, path),
                 get_double(h[2], line, path), get_int(h[3], line, path)};
    if (hit.point.layer < 0 || hit.point.layer >= n_layers) {
      throw ParseError(line, path, "layer index out of range");
    }
    hit.track_id = truth_from(get_int(h[4], line, path), line, path);
    if (hit.track_id) {
      check_truth_ids(ids, *hit.track_id, line, path);
    }
    ev.hits.push_back(hit);
  }
  return ev;
}

ToyEvent deserialize_toy_event(std::string_view record, std::size_t line) {
  const json j = parse_line(record, line);
  check_version(j, line);
  ToyEvent ev;
  ev.config = toy_config_from_json(field(j, "config", line), line);
  check_seed(j, ev.config.rng_seed, line);

  const json& tracks = get_array(field(j, "true_tracks", line), line, "true_tracks");
  std::vector<int> ids;
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const std::string path = indexed("true_tracks", k);
    const json& t = get_array(tracks[k], line, path, 4);
    ToyTrack tt;
    tt.id = get_int(t[0], line, path);
    tt.line = {get_double(t[1], line, path), get_double(t[2], line, path)};
    tt.n_hits = get_int(t[3], line, path);
    ids.push_back(tt.id);
    ev.tracks.push_back(tt);
  }

  const json& hits = get_array(field(j, "hits", line), line, "hits");
  ev.hits.reserve(hits.size());
  for (std::size_t k = 0; k < hits.size(); ++k) {
    const std::string path = indexed("hits", k);
    const json& h = get_array(hits[k], line, path, 4);
    ToyHit hit;
    hit.point = {get_double(h[0], line, path), get_double(h[1], line, path),
                 get_int(h[2], line, path)};
    if (hit.point.plane < 0 || hit.point.plane >= ev.config.n_planes) {
      throw ParseError(line, path, "plane index out of range");
    }
    hit.track_id = truth_from(get_int(h[3], line, path), line, path);
    if (hit.track_id) {
      check_truth_ids(ids, *hit.track_id, line, path);
    }
    ev.hits.push_back(hit);
  }
  return ev;
}

std::string corpus_header(EventModel model) {
  return header_line(kEventsFormat, model);
}

void write_corpus(std::ostream& os, const Corpus& corpus) {
  os << corpus_header(corpus.model) << '\n';
  if (corpus.model == EventModel::kSvelo) {
    for (const auto& ev : corpus.svelo) {
      os << serialize_event(ev) << '\n';
    }
  } else {
    for (const auto& ev : corpus.toy) {
      os << serialize_event(ev) << '\n';
    }
  }
}

Corpus read_corpus(std::istream& is) {
  std::string text;
  std::size_t line = 0;
  if (!next_line(is, text, line)) {
    throw ParseError(line, "", "empty corpus, header line missing");
  }
  Corpus corpus;
  corpus.model = read_header(parse_line(text, line), kEventsFormat, line);
  while (next_line(is, text, line)) {
    if (corpus.model == EventModel::kSvelo) {
      corpus.svelo.push_back(deserialize_event(text, line));
    } else {
      corpus.toy.push_back(deserialize_toy_event(text, line));
    }
  }
  return corpus;
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  write_corpus(os, corpus);
  if (!os.flush()) {
    throw IoError("failed writing '" + path + "'");
  }
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  return read_corpus(is);
}

void write_candidates(std::ostream& os, const CandidateFile& file) {
  os << header_line(kCandidatesFormat, file.model) << '\n';
  for (const auto& ev : file.events) {
    ojson j;
    j["event"] = ev.event;
    j["seed"] = ev.seed;
    ojson cands = ojson::array();
    for (const auto& c : ev.candidates) {
      cands.push_back(
          {c.params[0], c.params[1], c.response, c.cluster_size, c.seed_id});
    }
    j["candidates"] = std::move(cands);
    os << j.dump() << '\n';
  }
}

CandidateFile read_candidates(std::istream& is) {
  std::string text;
  std::size_t line = 0;
  if (!next_line(is, text, line)) {
    throw ParseError(line, "", "empty candidates file, header line missing");
  }
  CandidateFile file;
  file.model = read_header(parse_line(text, line), kCandidatesFormat, line);
  while (next_line(is, text, line)) {
    const json j = parse_line(text, line);
    EventCandidates ev;
    ev.event = get_u64(field(j, "event", line), line, "event");
    ev.seed = get_u64(field(j, "seed", line), line, "seed");
    const json& cands = get_array(field(j, "candidates", line), line, "candidates");
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const std::string path = indexed("candidates", k);
      const json& c = get_array(cands[k], line, path, 5);
      Candidate cand;
      cand.params = {get_double(c[0], line, path), get_double(c[1], line, path)};
      cand.response = get_double(c[2], line, path);
      cand.cluster_size = get_int(c[3], line, path);
      cand.seed_id = get_int(c[4], line, path);
      ev.candidates.push_back(cand);
    }
    file.events.push_back(std::move(ev));
  }
  return file;
}

}  // namespace retina
