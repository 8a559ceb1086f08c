#include "statenet/shapes.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "statenet/error.hpp"

namespace statenet {

namespace {

// Lexicographic; scan() sorts class directories the same way, so the
// index here is the label index after ingestion.
const std::vector<std::string> kClassNames = {
    "checker", "circle", "cross", "dots", "ring", "rings",
    "speckle", "square", "stripes", "triangle", "waves"};

uint64_t hash2(uint64_t key, int64_t a, int64_t b) {
  return Rng::mix(Rng::mix(key, static_cast<uint64_t>(a) * 0x9e3779b97f4a7c15ULL),
                  static_cast<uint64_t>(b));
}

// Pattern predicates over centered unit coordinates (roughly [-1,1]^2
// before the per-image similarity transform).
bool inside(const std::string& cls, double x, double y, uint64_t noise_key) {
  const double r = std::sqrt(x * x + y * y);
  if (cls == "circle") return r <= 0.62;
  if (cls == "ring") return r >= 0.38 && r <= 0.62;
  if (cls == "rings") return (r >= 0.14 && r <= 0.30) || (r >= 0.48 && r <= 0.62);
  if (cls == "square") return std::max(std::abs(x), std::abs(y)) <= 0.55;
  if (cls == "triangle") {
    // vertices (0,-0.68), (-0.66,0.52), (0.66,0.52)
    if (y > 0.52 || y < -0.68) return false;
    const double half = 0.66 * (y + 0.68) / 1.2;
    return std::abs(x) <= half;
  }
  if (cls == "cross") {
    return (std::abs(x) <= 0.18 && std::abs(y) <= 0.64) ||
           (std::abs(y) <= 0.18 && std::abs(x) <= 0.64);
  }
  if (cls == "stripes") {
    return static_cast<long>(std::floor((x + 4.0) / 0.30)) % 2 == 0;
  }
  if (cls == "checker") {
    const long cx = static_cast<long>(std::floor((x + 4.0) / 0.42));
    const long cy = static_cast<long>(std::floor((y + 4.0) / 0.42));
    return (cx + cy) % 2 == 0;
  }
  if (cls == "dots") {
    const double gx = std::round(x / 0.45), gy = std::round(y / 0.45);
    if (std::abs(gx) > 1 || std::abs(gy) > 1) return false;
    const double dx = x - gx * 0.45, dy = y - gy * 0.45;
    return dx * dx + dy * dy <= 0.14 * 0.14;
  }
  if (cls == "waves") {
    const double v = y + 0.20 * std::sin(x * 4.2);
    return static_cast<long>(std::floor((v + 4.0) / 0.30)) % 2 == 0;
  }
  if (cls == "speckle") {
    const auto cx = static_cast<int64_t>(std::floor(x * 5.0));
    const auto cy = static_cast<int64_t>(std::floor(y * 5.0));
    return (hash2(noise_key, cx, cy) & 1) != 0;
  }
  throw ValueError("render_shape: unknown class '" + cls + "'");
}

}  // namespace

const std::vector<std::string>& shapes_class_names() { return kClassNames; }

ImageU8 render_shape(int class_idx, int size, Rng& rng) {
  if (class_idx < 0 || class_idx >= static_cast<int>(kClassNames.size())) {
    throw ValueError("render_shape: class index out of range");
  }
  if (size < 8) throw ValueError("render_shape: size must be at least 8");
  const std::string& cls = kClassNames[static_cast<size_t>(class_idx)];

  // Per-image placement, orientation, palette. Hues are random but the
  // figure is always brighter than the ground, so the pattern, not the
  // palette, carries the class; nuisance ranges are kept moderate so the
  // desk-scale training budget suffices.
  const double theta = rng.uniform(-0.18f, 0.18f);
  const double scale = rng.uniform(0.90f, 1.10f);
  const double cx = rng.uniform(-0.08f, 0.08f);
  const double cy = rng.uniform(-0.08f, 0.08f);
  int bg[3], fg[3];
  for (int k = 0; k < 3; ++k) bg[k] = static_cast<int>(rng.index(71));
  for (int k = 0; k < 3; ++k) fg[k] = 150 + static_cast<int>(rng.index(101));
  const uint64_t noise_key = rng.next_u64();

  const double ct = std::cos(theta), st = std::sin(theta);
  ImageU8 img;
  img.h = size;
  img.w = size;
  img.c = 3;
  img.data.resize(static_cast<size_t>(size) * size * 3);

  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      const double u = ((px + 0.5) / size * 2.0 - 1.0 - cx) / scale;
      const double v = ((py + 0.5) / size * 2.0 - 1.0 - cy) / scale;
      const double x = ct * u + st * v;
      const double y = -st * u + ct * v;
      const bool on = inside(cls, x, y, noise_key);
      uint8_t* p = img.data.data() + (static_cast<size_t>(py) * size + px) * 3;
      for (int k = 0; k < 3; ++k) {
        const int jitter = static_cast<int>(rng.index(11)) - 5;
        int val = (on ? fg[k] : bg[k]) + jitter;
        if (val < 0) val = 0;
        if (val > 255) val = 255;
        p[k] = static_cast<uint8_t>(val);
      }
    }
  }
  return img;
}

void generate_shapes_dataset(const std::string& root, const ShapesConfig& cfg) {
  if (cfg.per_class < 1) throw ValueError("shapes: per_class must be at least 1");
  namespace fs = std::filesystem;
  for (size_t ci = 0; ci < kClassNames.size(); ++ci) {
    const fs::path dir = fs::path(root) / kClassNames[ci];
    fs::create_directories(dir);
    for (int i = 0; i < cfg.per_class; ++i) {
      Rng rng = Rng(cfg.seed).derive(0x736861706573ULL, static_cast<uint64_t>(ci),
                                     static_cast<uint64_t>(i));
      const ImageU8 img = render_shape(static_cast<int>(ci), cfg.size, rng);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.ppm", kClassNames[ci].c_str(), i);
      write_image((dir / name).string(), img);
    }
  }
}

}  // namespace statenet
