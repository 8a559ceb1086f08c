#pragma once

#include "statenet/rng.hpp"
#include "statenet/tensor.hpp"

namespace statenet {

// Augmentation factors. Defaults reproduce the training recipe;
// rescale is 1/255 (the usual normalization) and stays configurable.
struct AugmentConfig {
  float shear_range = 0.2f;          // radians of shear intensity
  float zoom_range = 0.2f;           // fraction around 1
  bool horizontal_flip = true;
  float rescale = 1.0f / 255.0f;
  float height_shift_range = 0.2f;   // fraction of image height
  float width_shift_range = 0.2f;    // fraction of image width
  float rotation_range = 40.0f;      // degrees

  // Throws ValueError when a range is negative, rotation exceeds 180
  // degrees, or rescale is not positive.
  void validate() const;

  static AugmentConfig none() {
    AugmentConfig c;
    c.shear_range = 0;
    c.zoom_range = 0;
    c.horizontal_flip = false;
    c.rescale = 1.0f;
    c.height_shift_range = 0;
    c.width_shift_range = 0;
    c.rotation_range = 0;
    return c;
  }
};

// One sampled transform. Shifts are in pixels: tx moves rows, ty columns.
struct AffineParams {
  double theta = 0;   // degrees
  double tx = 0;      // rows
  double ty = 0;      // columns
  double shear = 0;   // radians
  double zx = 1;
  double zy = 1;
  bool flip = false;

  bool is_identity() const {
    return theta == 0 && tx == 0 && ty == 0 && shear == 0 && zx == 1 && zy == 1 &&
           !flip;
  }
};

// Draws one parameter set. Sampling order is fixed (theta, tx, ty, shear,
// zx, zy, flip) so a seeded rng reproduces the stream; the flip draw is
// consumed only when horizontal_flip is enabled. h and w size the shift
// intervals.
AffineParams sample_params(const AugmentConfig& cfg, int h, int w, Rng& rng);

// Applies the composed transform
//   M = T(center) R(theta) Shear(shear) Zoom(zx,zy) T(shift) T(-center)
// by inverse mapping with nearest-neighbor sampling; source coordinates
// rounding outside the image clamp to the nearest edge pixel. The flip is
// a column reversal after the affine. img is one h*w*c image.
Tensor apply_affine(const Tensor& img, const AffineParams& p);

// Training: sample, transform, rescale. Inference: rescale only.
Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, Rng& rng,
                     bool training);

}  // namespace statenet
