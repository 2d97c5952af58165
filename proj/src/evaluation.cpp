#include "retina/evaluation.hpp"

#include "retina/errors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace retina {

double match_distance(const TrackParams& a, const TrackParams& b,
                      MatchMetric metric) {
  if (metric == MatchMetric::kAngle) {
    return angular_separation(a, b);
  }
  return std::max(std::abs(a.theta - b.theta), std::abs(a.phi - b.phi));
}

double MatchReport::efficiency() const {
  return n_reconstructible == 0 ? 0.0
                                : static_cast<double>(matched.size()) /
                                      static_cast<double>(n_reconstructible);
}

double MatchReport::ghost_rate() const {
  return n_candidates == 0 ? 0.0
                           : static_cast<double>(ghosts.size()) /
                                 static_cast<double>(n_candidates);
}

MatchReport match_candidates(std::span<const Candidate> candidates,
                             std::span<const TrueTrack> truths, double epsilon,
                             MatchMetric metric) {
  if (!(epsilon > 0.0)) {
    throw InvalidInput("match_candidates: epsilon must be positive");
  }
  MatchReport report;
  report.n_reconstructible = truths.size();
  report.n_candidates = candidates.size();

  struct Pair {
    double distance;
    int track_id;
    std::size_t truth;
    std::size_t candidate;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double d = match_distance(
          TrackParams::from_vector(candidates[c].params), truths[t].params,
          metric);
      if (d <= epsilon) {
        pairs.push_back({d, truths[t].id, t, c});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.track_id, a.candidate) <
           std::tie(b.distance, b.track_id, b.candidate);
  });

  std::vector<bool> truth_used(truths.size(), false);
  std::vector<bool> cand_used(candidates.size(), false);
  for (const Pair& p : pairs) {
    if (truth_used[p.truth] || cand_used[p.candidate]) {
      continue;
    }
    truth_used[p.truth] = true;
    cand_used[p.candidate] = true;
    report.matched.push_back({p.candidate, p.track_id, p.distance});
  }
  for (std::size_t t = 0; t < truths.size(); ++t) {
    if (!truth_used[t]) {
      report.missed_ids.push_back(truths[t].id);
    }
  }
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!cand_used[c]) {
      report.ghosts.push_back(c);
    }
  }
  return report;
}

double Budget::units() const {
  return static_cast<double>(n_seeds) * static_cast<double>(q) * step_cost;
}

double Budget::allowance() const { return alpha * static_cast<double>(n_grid); }

Budget compute_budget(double alpha, std::uint64_t n_grid, int q,
                      double step_cost) {
  if (!(alpha > 0.0) || n_grid == 0 || q <= 0 || !(step_cost > 0.0)) {
    throw InvalidInput("compute_budget: all inputs must be positive");
  }
  const double raw = alpha * static_cast<double>(n_grid) /
                     (step_cost * static_cast<double>(q));
  const double seeds = std::max(1.0, std::round(raw));
  return {alpha, n_grid, q, step_cost, static_cast<std::uint64_t>(seeds)};
}

void EfficiencyTally::add(const MatchReport& r) {
  matched += r.matched.size();
  reconstructible += r.n_reconstructible;
  ghosts += r.ghosts.size();
  candidates += r.n_candidates;
}

double EfficiencyTally::efficiency() const {
  return reconstructible == 0 ? 0.0
                              : static_cast<double>(matched) /
                                    static_cast<double>(reconstructible);
}

double EfficiencyTally::error() const {
  if (reconstructible == 0) {
    return 0.0;
  }
  const double e = efficiency();
  return std::sqrt(e * (1.0 - e) / static_cast<double>(reconstructible));
}

double EfficiencyTally::ghost_rate() const {
  return candidates == 0 ? 0.0
                         : static_cast<double>(ghosts) /
                               static_cast<double>(candidates);
}

}  // namespace retina
