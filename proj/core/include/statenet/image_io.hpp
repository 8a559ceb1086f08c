#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statenet/tensor.hpp"

namespace statenet {

// Decoded raster, 8 bits per sample, row-major, c interleaved (1 or 3).
struct ImageU8 {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<uint8_t> data;

  size_t size() const { return data.size(); }
};

// Decodes by magic bytes: PPM/PGM (P5/P6) natively, PNG and JPEG when the
// build found the system decoders. Failures throw DecodeError naming the
// path.
ImageU8 decode_image(const std::string& path);

// Writes a raster by extension: .ppm/.pgm always, .png when compiled in.
void write_image(const std::string& path, const ImageU8& img);

// u8 -> float tensor h*w*3 with values in [0,255]; grayscale replicates.
Tensor image_to_tensor(const ImageU8& img);

// float tensor h*w*c (c 1 or 3) -> u8 with clamping and round-to-nearest.
ImageU8 tensor_to_image(const Tensor& t);

// Bilinear resample; source coordinate = (dest + 0.5) * scale - 0.5,
// clamped to the valid range. Passthrough (same object semantics, equal
// bits) when the size already matches.
Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);

// decode + replicate gray + resize; the standard ingestion path.
Tensor load_image(const std::string& path, int target_h = 150, int target_w = 150);

}  // namespace statenet
