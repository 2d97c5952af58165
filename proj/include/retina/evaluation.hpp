#pragma once

#include "retina/candidate.hpp"
#include "retina/simulator.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace retina {

/// How "within epsilon of the true parameters" is measured.
enum class MatchMetric {
  /// Angle between the direction vectors.
  kAngle,
  /// |d theta| <= epsilon and |d phi| <= epsilon; distance is the larger.
  kPerParameter,
};

double match_distance(const TrackParams& a, const TrackParams& b,
                      MatchMetric metric);

struct MatchedPair {
  std::size_t candidate = 0;  // index into the candidate list
  int track_id = 0;
  double distance = 0.0;
};

struct MatchReport {
  std::vector<MatchedPair> matched;
  std::vector<int> missed_ids;
  std::vector<std::size_t> ghosts;  // candidate indices
  std::size_t n_reconstructible = 0;
  std::size_t n_candidates = 0;

  double efficiency() const;
  double ghost_rate() const;
};

/// Greedy one-to-one matching. All pairs within epsilon are visited by
/// ascending distance, ties by lower track id, then lower candidate index.
MatchReport match_candidates(std::span<const Candidate> candidates,
                             std::span<const TrueTrack> truths, double epsilon,
                             MatchMetric metric = MatchMetric::kAngle);

/// Seed count that spends the fraction `alpha` of a grid search's budget.
struct Budget {
  double alpha = 0.0;
  std::uint64_t n_grid = 0;
  int q = 0;
  double step_cost = 0.0;  // C0
  std::uint64_t n_seeds = 0;

  /// Response units the multistart run is charged: n_seeds * q * C0.
  double units() const;
  /// alpha * n_grid.
  double allowance() const;
};

/// n_seeds = round(alpha * n_grid / (C0 * q)), at least 1.
Budget compute_budget(double alpha, std::uint64_t n_grid, int q,
                      double step_cost);

/// Pooled efficiency over many events with its binomial error.
struct EfficiencyTally {
  std::uint64_t matched = 0;
  std::uint64_t reconstructible = 0;
  std::uint64_t ghosts = 0;
  std::uint64_t candidates = 0;

  void add(const MatchReport& r);
  double efficiency() const;
  /// sqrt(e (1 - e) / N).
  double error() const;
  double ghost_rate() const;
};

}  // namespace retina
