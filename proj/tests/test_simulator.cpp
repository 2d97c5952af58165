#include "fixtures.hpp"

#include "retina/errors.hpp"
#include "retina/event_io.hpp"
#include "retina/simulator.hpp"
#include "retina/toy.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace retina;
using retina::testing::velo_config;

namespace {

std::string corpus_text(std::uint64_t first_seed, int n) {
  Corpus c;
  for (int i = 0; i < n; ++i) {
    c.svelo.push_back(generate_event(velo_config(20, first_seed + i)));
  }
  std::ostringstream os;
  write_corpus(os, c);
  return os.str();
}

}  // namespace

TEST_CASE("a fully contained track with certain hits leaves one hit per layer") {
  SimConfig c = velo_config(1, 3);
  c.geometry = DetectorGeometry::equally_spaced(20, 700.0, 0.0, 1000.0);
  c.p_hit = 1.0;
  c.noise_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.rng_seed = seed;
    const Event ev = generate_event(c);
    REQUIRE(ev.true_tracks.size() == 1);
    CHECK(ev.hits.size() == 20);
    CHECK(ev.true_tracks[0].n_hits == 20);
    for (const Hit& h : ev.hits) {
      CHECK(h.track_id == ev.true_tracks[0].id);
    }
  }
}

TEST_CASE("no hit probability leaves only noise") {
  SimConfig c = velo_config(30, 8);
  c.p_hit = 0.0;
  const Event ev = generate_event(c);
  CHECK(ev.true_tracks.empty());
  CHECK(ev.noise_count() == ev.hits.size());
  CHECK(ev.hits.size() > 150);
}

TEST_CASE("event invariants") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Event ev = generate_event(velo_config(50, seed));
    std::map<int, int> counted;
    for (const Hit& h : ev.hits) {
      REQUIRE(h.point.layer >= 0);
      REQUIRE(h.point.layer < 20);
      CHECK(h.point.z == ev.config.geometry.layer_z[h.point.layer]);
      if (h.track_id) {
        ++counted[*h.track_id];
      }
    }
    std::set<int> ids;
    for (const TrueTrack& t : ev.true_tracks) {
      ids.insert(t.id);
      CHECK(t.n_hits >= 2);
      CHECK(counted[t.id] == t.n_hits);
      CHECK(t.params.is_valid());
      CHECK(t.params.is_forward());
    }
    for (const auto& [id, n] : counted) {
      CHECK(ids.count(id) == 1);
    }
    CHECK(ev.reconstructible_ids().size() == ev.true_tracks.size());
  }
}

TEST_CASE("track hits come from crossings inside the annulus") {
  const Event ev = generate_event(velo_config(100, 17));
  std::map<int, TrackParams> params;
  for (const TrueTrack& t : ev.true_tracks) {
    params[t.id] = t.params;
  }
  for (const Hit& h : ev.hits) {
    if (!h.track_id) {
      continue;
    }
    const Vector2 at = intersect_layer(params[*h.track_id], h.point.z);
    CHECK(ev.config.geometry.contains_radius(at.norm()));
    // Smearing of 0.01 mm cannot move a hit by 0.1 mm in practice.
    CHECK(std::hypot(h.point.x - at.x(), h.point.y - at.y()) < 0.1);
  }
}

TEST_CASE("mean noise count") {
  double total = 0.0;
  const int n_events = 1000;
  for (int i = 0; i < n_events; ++i) {
    const Event ev = generate_event(velo_config(0, 100000 + i));
    CHECK(ev.true_tracks.empty());
    total += static_cast<double>(ev.hits.size());
  }
  const double mean = total / n_events;
  CHECK(std::abs(mean - 250.0) <= 3.0 * std::sqrt(250.0 / n_events));
}

TEST_CASE("mean hits per track follow the hit probability") {
  SimConfig c = velo_config(50, 0);
  c.noise_mean = 0.0;
  double crossings = 0.0;
  double hits = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    c.rng_seed = seed;
    const Event ev = generate_event(c);
    hits += static_cast<double>(ev.hits.size());
    // Particle i starts its stream with its direction.
    for (std::uint64_t i = 0; i < 50; ++i) {
      RandomStream rng = RandomStream::derive(seed, {kTrackStream, i});
      const TrackParams p = sample_physical_track(c.eta_min, c.eta_max, rng);
      for (double z : c.geometry.layer_z) {
        crossings += c.geometry.contains_radius(intersect_layer(p, z).norm());
      }
    }
  }
  // Binomial(crossings, 0.5).
  CHECK(std::abs(hits - 0.5 * crossings) <= 4.0 * std::sqrt(0.25 * crossings));
}

TEST_CASE("noise hits are uniform over layers and annulus area") {
  const auto g = DetectorGeometry::equally_spaced(20, 700.0, 8.0, 42.0);
  RandomStream rng(12345);
  const int n = 100000;
  constexpr int kBins = 20;
  std::vector<int> radial(kBins, 0);
  std::vector<int> layers(20, 0);
  std::complex<double> phase = 0.0;
  for (int k = 0; k < n; ++k) {
    const Hit h = sample_noise_hit(g, rng);
    REQUIRE(h.is_noise());
    const double r = std::hypot(h.point.x, h.point.y);
    REQUIRE(r >= 8.0);
    REQUIRE(r <= 42.0);
    CHECK(h.point.z == g.layer_z[h.point.layer]);
    ++layers[h.point.layer];
    ++radial[std::min(kBins - 1, static_cast<int>((r - 8.0) / 34.0 * kBins))];
    phase += std::polar(1.0, std::atan2(h.point.y, h.point.x));
  }
  // Radial density proportional to r: P(bin) = (r1^2 - r0^2) / (42^2 - 8^2).
  double chi2 = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double r0 = 8.0 + 34.0 * b / kBins;
    const double r1 = 8.0 + 34.0 * (b + 1) / kBins;
    const double expected = n * (r1 * r1 - r0 * r0) / (42.0 * 42.0 - 8.0 * 8.0);
    chi2 += std::pow(radial[b] - expected, 2) / expected;
  }
  CHECK(chi2 < 36.19);  // chi-square, 19 degrees of freedom, 1%

  double chi2_layers = 0.0;
  for (int count : layers) {
    chi2_layers += std::pow(count - n / 20.0, 2) / (n / 20.0);
  }
  CHECK(chi2_layers < 36.19);

  CHECK(std::abs(phase / static_cast<double>(n)) < 0.02);
}

TEST_CASE("physical prior covers the pseudo-rapidity range") {
  RandomStream rng(99);
  for (int k = 0; k < 10000; ++k) {
    const TrackParams p = sample_physical_track(1.0, 6.0, rng);
    CHECK(p.is_valid());
    CHECK(p.is_forward());
    const double polar = std::acos(params_to_direction(p).z());
    CHECK(polar <= eta_to_polar(1.0) + 1e-12);
    CHECK(polar >= eta_to_polar(6.0) - 1e-12);
  }
}

TEST_CASE("reconstructible count mode") {
  SimConfig c = velo_config(40, 5);
  c.count_mode = TrackCount::kReconstructible;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.rng_seed = seed;
    CHECK(generate_event(c).true_tracks.size() == 40);
  }
}

TEST_CASE("invalid configurations are rejected") {
  SimConfig c = velo_config(10, 1);
  c.p_hit = 1.5;
  CHECK_THROWS_AS(generate_event(c), ConfigError);
  c = velo_config(10, 1);
  c.smear_sigma = 0.0;
  CHECK_THROWS_AS(generate_event(c), ConfigError);
  c = velo_config(10, 1);
  c.eta_min = 6.0;
  c.eta_max = 1.0;
  CHECK_THROWS_AS(generate_event(c), ConfigError);
  c = velo_config(10, 1);
  c.noise_mean = -1.0;
  CHECK_THROWS_AS(generate_event(c), ConfigError);
}

TEST_CASE("generation is deterministic and order independent") {
  const Event a = generate_event(velo_config(50, 42));
  generate_event(velo_config(50, 43));
  const Event b = generate_event(velo_config(50, 42));
  CHECK(a == b);
  CHECK(serialize_event(a) == serialize_event(b));
  CHECK_FALSE(a == generate_event(velo_config(50, 44)));
}

TEST_CASE("a 100-event corpus hashes identically across runs") {
  const std::string first = corpus_text(1000, 100);
  const std::string second = corpus_text(1000, 100);
  CHECK(std::hash<std::string>{}(first) == std::hash<std::string>{}(second));
  CHECK(first == second);
}

TEST_CASE("events round-trip through serialization") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Event ev = generate_event(velo_config(static_cast<int>(seed) * 5, seed));
    const std::string line = serialize_event(ev);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(deserialize_event(line) == ev);
  }
  SimConfig empty = velo_config(0, 1);
  empty.noise_mean = 0.0;
  const Event none = generate_event(empty);
  CHECK(none.hits.empty());
  CHECK(deserialize_event(serialize_event(none)) == none);
}

TEST_CASE("toy events round-trip through serialization") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyEvent ev = generate_toy_event(fig1_fixture(seed).config);
    CHECK(deserialize_toy_event(serialize_event(ev)) == ev);
    const ToyEvent close = generate_toy_event(fig2_fixture(1e-2, seed).config);
    CHECK(deserialize_toy_event(serialize_event(close)) == close);
  }
}

TEST_CASE("corpus round-trips") {
  Corpus c;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.svelo.push_back(generate_event(velo_config(10, seed)));
  }
  std::stringstream ss;
  write_corpus(ss, c);
  const Corpus back = read_corpus(ss);
  CHECK(back.model == EventModel::kSvelo);
  CHECK(back.svelo == c.svelo);
  CHECK(back.seed(3) == 3);

  Corpus toy;
  toy.model = EventModel::kToy;
  toy.toy.push_back(generate_toy_event(fig1_fixture(1).config));
  std::stringstream ts;
  write_corpus(ts, toy);
  const Corpus toy_back = read_corpus(ts);
  CHECK(toy_back.model == EventModel::kToy);
  CHECK(toy_back.toy == toy.toy);
}

TEST_CASE("malformed records name the line and field") {
  Corpus c;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    c.svelo.push_back(generate_event(velo_config(5, seed)));
  }
  std::ostringstream os;
  write_corpus(os, c);
  std::string text = os.str();

  SUBCASE("wrong type") {
    // Third line is the second event.
    std::size_t line_start = 0;
    for (int k = 0; k < 2; ++k) {
      line_start = text.find('\n', line_start) + 1;
    }
    const std::size_t at = text.find("\"p_hit\":", line_start);
    text.replace(at, std::string("\"p_hit\":").size(), "\"p_hit\":\"half\",\"x\":");
    std::istringstream is(text);
    try {
      read_corpus(is);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.field() == "config.p_hit");
    }
  }
  SUBCASE("truncated json") {
    text.resize(text.size() - 10);
    std::istringstream is(text);
    try {
      read_corpus(is);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("unknown format version") {
    const std::size_t at = text.find("\"format_version\":1", text.find('\n'));
    text.replace(at, std::string("\"format_version\":1").size(), "\"format_version\":9");
    std::istringstream is(text);
    CHECK_THROWS_AS(read_corpus(is), ParseError);
  }
  SUBCASE("truth refers to a missing track") {
    CHECK_THROWS_AS(
        deserialize_event(R"({"format_version":1,"seed":1,"config":{"n_tracks":0,)"
                          R"("count_mode":"generated","layer_z":[10],"r_inner":1,)"
                          R"("r_outer":2,"eta_min":1,"eta_max":6,"p_hit":0.5,)"
                          R"("n_min":2,"smear_sigma":0.01,"noise_mean":0,)"
                          R"("rng_seed":1},"hits":[[1,1,10,0,4]],"true_tracks":[]})"),
        ParseError);
  }
}
