#pragma once

#include "retina/candidate.hpp"
#include "retina/simulator.hpp"
#include "retina/toy.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace retina {

// Corpus files are newline-delimited JSON: one header line naming the
// format, version and event model, then one event per line.
//
//   {"format":"retina-events","format_version":1,"model":"svelo"}
//   {"format_version":1,"seed":7,"config":{...},
//    "hits":[[x,y,z,layer,truth],...],"true_tracks":[[id,theta,phi,n_hits],...]}
//
// truth is -1 for noise. Toy events store hits as [x,y,plane,truth] and
// tracks as [id,angle,offset,n_hits]. Doubles are written in shortest
// round-trip form, so reading back is exact.

inline constexpr int kCorpusFormatVersion = 1;

enum class EventModel { kSvelo, kToy };

std::string to_string(EventModel model);
/// Throws InvalidInput for anything but "svelo" or "toy".
EventModel event_model_from_string(std::string_view name);

struct Corpus {
  EventModel model = EventModel::kSvelo;
  std::vector<Event> svelo;
  std::vector<ToyEvent> toy;

  std::size_t size() const {
    return model == EventModel::kSvelo ? svelo.size() : toy.size();
  }
  std::uint64_t seed(std::size_t index) const;
};

std::string serialize_event(const Event& event);
std::string serialize_event(const ToyEvent& event);

/// `line_no` only feeds error messages.
Event deserialize_event(std::string_view record, std::size_t line_no = 1);
ToyEvent deserialize_toy_event(std::string_view record,
                               std::size_t line_no = 1);

std::string corpus_header(EventModel model);

void write_corpus(std::ostream& os, const Corpus& corpus);
/// Throws ParseError with the offending line and field.
Corpus read_corpus(std::istream& is);

void write_corpus_file(const std::string& path, const Corpus& corpus);
Corpus read_corpus_file(const std::string& path);

// Candidate files follow the same layout:
//
//   {"format":"retina-candidates","format_version":1,"model":"svelo"}
//   {"event":0,"seed":7,"candidates":[[p0,p1,response,cluster_size,seed_id],...]}
//
// seed_id is -1 for grid candidates.

struct EventCandidates {
  std::size_t event = 0;
  std::uint64_t seed = 0;
  std::vector<Candidate> candidates;
};

struct CandidateFile {
  EventModel model = EventModel::kSvelo;
  std::vector<EventCandidates> events;
};

void write_candidates(std::ostream& os, const CandidateFile& file);
CandidateFile read_candidates(std::istream& is);

}  // namespace retina
