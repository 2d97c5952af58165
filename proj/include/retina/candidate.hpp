#pragma once

#include "retina/geometry.hpp"

#include <optional>

namespace retina {

struct GridCell {
  int i = 0;
  int j = 0;

  bool operator==(const GridCell&) const = default;
};

/// A reconstructed track hypothesis. `params` is (theta, phi) for the VELO
/// model and (angle, offset) for the toy model. Provenance is either the
/// grid cell of the peak or the index of the seed whose trajectory led here.
struct Candidate {
  Vector2 params = Vector2::Zero();
  double response = 0.0;
  int cluster_size = 1;
  int seed_id = -1;
  std::optional<GridCell> cell;
};

}  // namespace retina
