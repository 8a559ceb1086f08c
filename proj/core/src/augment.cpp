#include "statenet/augment.hpp"

#include <cmath>

#include "statenet/error.hpp"

namespace statenet {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void AugmentConfig::validate() const {
  if (shear_range < 0 || zoom_range < 0 || height_shift_range < 0 ||
      width_shift_range < 0 || rotation_range < 0) {
    throw ValueError("augment: ranges must be non-negative");
  }
  if (rotation_range > 180.0f) {
    throw ValueError("augment: rotation_range must be at most 180 degrees");
  }
  if (!(rescale > 0)) {
    throw ValueError("augment: rescale must be positive");
  }
}

AffineParams sample_params(const AugmentConfig& cfg, int h, int w, Rng& rng) {
  cfg.validate();
  AffineParams p;
  p.theta = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
  p.tx = rng.uniform(-static_cast<float>(h) * cfg.height_shift_range,
                     static_cast<float>(h) * cfg.height_shift_range);
  p.ty = rng.uniform(-static_cast<float>(w) * cfg.width_shift_range,
                     static_cast<float>(w) * cfg.width_shift_range);
  p.shear = rng.uniform(-cfg.shear_range, cfg.shear_range);
  p.zx = rng.uniform(1.0f - cfg.zoom_range, 1.0f + cfg.zoom_range);
  p.zy = rng.uniform(1.0f - cfg.zoom_range, 1.0f + cfg.zoom_range);
  p.flip = cfg.horizontal_flip && rng.bernoulli(0.5f);
  return p;
}

Tensor apply_affine(const Tensor& img, const AffineParams& p) {
  Tensor::require_ndim(img, 3, "apply_affine");
  if (p.zx == 0 || p.zy == 0) {
    throw ValueError("apply_affine: zoom factor 0 makes the transform singular");
  }
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);

  Tensor out = img;
  if (!(p.theta == 0 && p.tx == 0 && p.ty == 0 && p.shear == 0 && p.zx == 1 &&
        p.zy == 1)) {
    // Row convention: coordinate vector is (row, col). The forward map is
    // dest = A (src - center + shift) + center with A = R * Shear * Zoom,
    // so each destination pixel pulls from src = A^-1 (dest - center) +
    // center - shift.
    const double rad = p.theta * kPi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double sh = std::tan(p.shear);
    // R = [cs -sn; sn cs], Shear = [1 sh; 0 1], Zoom = diag(zx, zy).
    const double a11 = cs * p.zx;
    const double a12 = (cs * sh - sn) * p.zy;
    const double a21 = sn * p.zx;
    const double a22 = (sn * sh + cs) * p.zy;
    const double det = a11 * a22 - a12 * a21;
    const double i11 = a22 / det, i12 = -a12 / det;
    const double i21 = -a21 / det, i22 = a11 / det;
    const double cr = (h - 1) / 2.0, cc = (w - 1) / 2.0;

    out = Tensor({h, w, c});
    const float* src = img.ptr();
    float* dst = out.ptr();
    for (int r = 0; r < h; ++r) {
      const double dr = r - cr;
      for (int q = 0; q < w; ++q) {
        const double dq = q - cc;
        const double sr = i11 * dr + i12 * dq + cr - p.tx;
        const double sq = i21 * dr + i22 * dq + cc - p.ty;
        long rr = static_cast<long>(std::floor(sr + 0.5));
        long qq = static_cast<long>(std::floor(sq + 0.5));
        if (rr < 0) rr = 0;
        if (rr > h - 1) rr = h - 1;
        if (qq < 0) qq = 0;
        if (qq > w - 1) qq = w - 1;
        const float* in = src + (static_cast<size_t>(rr) * w + qq) * c;
        float* o = dst + (static_cast<size_t>(r) * w + q) * c;
        for (int k = 0; k < c; ++k) o[k] = in[k];
      }
    }
  }

  if (p.flip) {
    Tensor flipped({h, w, c});
    const float* src = out.ptr();
    float* dst = flipped.ptr();
    for (int r = 0; r < h; ++r) {
      for (int q = 0; q < w; ++q) {
        const float* in = src + (static_cast<size_t>(r) * w + (w - 1 - q)) * c;
        float* o = dst + (static_cast<size_t>(r) * w + q) * c;
        for (int k = 0; k < c; ++k) o[k] = in[k];
      }
    }
    out = std::move(flipped);
  }
  return out;
}

Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, Rng& rng,
                     bool training) {
  cfg.validate();
  Tensor::require_ndim(img, 3, "augment_image");
  Tensor out;
  if (training) {
    const AffineParams p = sample_params(cfg, img.dim(0), img.dim(1), rng);
    out = apply_affine(img, p);
  } else {
    out = img;
  }
  if (cfg.rescale != 1.0f) {
    float* d = out.ptr();
    for (size_t i = 0; i < out.size(); ++i) d[i] *= cfg.rescale;
  }
  return out;
}

}  // namespace statenet
