#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statenet/image_io.hpp"
#include "statenet/rng.hpp"

namespace statenet {

// Synthetic 11-class dataset for desk-scale experiments. Classes are
// geometric patterns chosen to stay mutually distinguishable under the
// augmentation pipeline's rotations, shifts, shears, zooms and flips
// (hole counts, corner counts and texture periodicity survive affine
// maps); per-image color, placement, scale and orientation are random so
// the task is learnable but not a lookup table.
struct ShapesConfig {
  int per_class = 100;
  int size = 64;
  uint64_t seed = 0;
};

// The class list, lexicographically sorted (matching scan()'s label order).
const std::vector<std::string>& shapes_class_names();

// Renders one sample of a class. Exposed for tests; class_idx indexes
// shapes_class_names().
ImageU8 render_shape(int class_idx, int size, Rng& rng);

// Writes <root>/<class>/<class>_NNNN.ppm for every class; per-image rng is
// derived from (seed, class, index) so any subset is reproducible.
void generate_shapes_dataset(const std::string& root, const ShapesConfig& cfg);

}  // namespace statenet
