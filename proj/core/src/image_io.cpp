#include "statenet/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "statenet/error.hpp"

#ifdef STATENET_WITH_PNG
#include <png.h>
#endif
#ifdef STATENET_WITH_JPEG
#include <csetjmp>

#include <jpeglib.h>
#endif

namespace statenet {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DecodeError("cannot open image " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

// PNM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
int next_pnm_int(const std::string& s, size_t& pos, const std::string& path) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
    throw DecodeError("malformed PNM header in " + path);
  }
  long v = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    v = v * 10 + (s[pos] - '0');
    if (v > 1 << 20) throw DecodeError("implausible PNM header value in " + path);
    ++pos;
  }
  return static_cast<int>(v);
}

ImageU8 decode_pnm(const std::string& bytes, const std::string& path) {
  const bool gray = bytes[1] == '5';
  size_t pos = 2;
  ImageU8 img;
  img.w = next_pnm_int(bytes, pos, path);
  img.h = next_pnm_int(bytes, pos, path);
  const int maxval = next_pnm_int(bytes, pos, path);
  if (img.w < 1 || img.h < 1) throw DecodeError("empty PNM image " + path);
  if (maxval < 1 || maxval > 255) {
    throw DecodeError("unsupported PNM maxval " + std::to_string(maxval) + " in " +
                      path + " (8-bit only)");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DecodeError("malformed PNM header in " + path);
  }
  ++pos;  // single whitespace byte separates header from raster
  img.c = gray ? 1 : 3;
  const size_t need = static_cast<size_t>(img.h) * img.w * img.c;
  if (bytes.size() - pos < need) {
    throw DecodeError("truncated PNM raster in " + path);
  }
  img.data.assign(bytes.begin() + static_cast<ptrdiff_t>(pos),
                  bytes.begin() + static_cast<ptrdiff_t>(pos + need));
  if (maxval != 255) {
    for (auto& b : img.data) {
      b = static_cast<uint8_t>((b * 255 + maxval / 2) / maxval);
    }
  }
  return img;
}

#ifdef STATENET_WITH_PNG
ImageU8 decode_png(const std::string& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str())) {
    throw DecodeError("cannot decode PNG " + path + ": " + pi.message);
  }
  pi.format = PNG_FORMAT_RGB;
  ImageU8 img;
  img.h = static_cast<int>(pi.height);
  img.w = static_cast<int>(pi.width);
  img.c = 3;
  img.data.resize(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, img.data.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw DecodeError("cannot decode PNG " + path + ": " + pi.message);
  }
  return img;
}

void write_png(const std::string& path, const ImageU8& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.w);
  pi.height = static_cast<png_uint_32>(img.h);
  pi.format = img.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path + ": " + pi.message);
  }
}
#endif

#ifdef STATENET_WITH_JPEG
struct JpegErr {
  jpeg_error_mgr mgr;
  std::jmp_buf jb;
};

void jpeg_err_exit(j_common_ptr cinfo) {
  std::longjmp(reinterpret_cast<JpegErr*>(cinfo->err)->jb, 1);
}

ImageU8 decode_jpeg(const std::string& bytes, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErr err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_err_exit;
  if (setjmp(err.jb)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("cannot decode JPEG " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  ImageU8 img;
  img.h = static_cast<int>(cinfo.output_height);
  img.w = static_cast<int>(cinfo.output_width);
  img.c = 3;
  img.data.resize(static_cast<size_t>(img.h) * img.w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.data.data() + static_cast<size_t>(cinfo.output_scanline) * img.w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}
#endif

}  // namespace

ImageU8 decode_image(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 8) throw DecodeError("file too short to be an image: " + path);
  if (bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  static const unsigned char png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(bytes.data(), png_magic, 8) == 0) {
#ifdef STATENET_WITH_PNG
    return decode_png(path);
#else
    throw DecodeError("PNG support not compiled in, cannot decode " + path);
#endif
  }
  if (static_cast<unsigned char>(bytes[0]) == 0xff &&
      static_cast<unsigned char>(bytes[1]) == 0xd8) {
#ifdef STATENET_WITH_JPEG
    return decode_jpeg(bytes, path);
#else
    throw DecodeError("JPEG support not compiled in, cannot decode " + path);
#endif
  }
  throw DecodeError("unrecognized image format: " + path);
}

void write_image(const std::string& path, const ImageU8& img) {
  if (img.h < 1 || img.w < 1 || (img.c != 1 && img.c != 3)) {
    throw ValueError("write_image: invalid raster geometry");
  }
  if (img.data.size() != static_cast<size_t>(img.h) * img.w * img.c) {
    throw ValueError("write_image: raster size does not match geometry");
  }
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".ppm" || ext == ".pgm") {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << (img.c == 1 ? "P5\n" : "P6\n") << img.w << " " << img.h << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    return;
  }
  if (ext == ".png") {
#ifdef STATENET_WITH_PNG
    write_png(path, img);
    return;
#else
    throw IoError("PNG support not compiled in; use a .ppm path instead of " + path);
#endif
  }
  throw ValueError("write_image: unsupported extension on " + path +
                   " (use .ppm, .pgm or .png)");
}

Tensor image_to_tensor(const ImageU8& img) {
  Tensor t({img.h, img.w, 3});
  float* d = t.ptr();
  const size_t px = static_cast<size_t>(img.h) * img.w;
  if (img.c == 3) {
    for (size_t i = 0; i < px * 3; ++i) d[i] = img.data[i];
  } else if (img.c == 1) {
    for (size_t i = 0; i < px; ++i) {
      const float v = img.data[i];
      d[3 * i] = v;
      d[3 * i + 1] = v;
      d[3 * i + 2] = v;
    }
  } else {
    throw ValueError("image_to_tensor: channel count must be 1 or 3");
  }
  return t;
}

ImageU8 tensor_to_image(const Tensor& t) {
  Tensor::require_ndim(t, 3, "tensor_to_image");
  const int c = t.dim(2);
  if (c != 1 && c != 3) {
    throw ValueError("tensor_to_image: channel count must be 1 or 3, got " +
                     std::to_string(c));
  }
  ImageU8 img;
  img.h = t.dim(0);
  img.w = t.dim(1);
  img.c = c;
  img.data.resize(t.size());
  const float* d = t.ptr();
  for (size_t i = 0; i < t.size(); ++i) {
    float v = std::floor(d[i] + 0.5f);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    img.data[i] = static_cast<uint8_t>(v);
  }
  return img;
}

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  Tensor::require_ndim(img, 3, "resize_bilinear");
  if (out_h < 1 || out_w < 1) {
    throw ValueError("resize_bilinear: target size must be positive");
  }
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  if (h == out_h && w == out_w) return img;

  Tensor out({out_h, out_w, c});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  const float* src = img.ptr();
  float* dst = out.ptr();
  for (int r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    if (fy > h - 1) fy = h - 1;
    const int y0 = static_cast<int>(fy);
    const int y1 = y0 < h - 1 ? y0 + 1 : y0;
    const double wy = fy - y0;
    for (int q = 0; q < out_w; ++q) {
      double fx = (q + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      if (fx > w - 1) fx = w - 1;
      const int x0 = static_cast<int>(fx);
      const int x1 = x0 < w - 1 ? x0 + 1 : x0;
      const double wx = fx - x0;
      const float* p00 = src + (static_cast<size_t>(y0) * w + x0) * c;
      const float* p01 = src + (static_cast<size_t>(y0) * w + x1) * c;
      const float* p10 = src + (static_cast<size_t>(y1) * w + x0) * c;
      const float* p11 = src + (static_cast<size_t>(y1) * w + x1) * c;
      float* o = dst + (static_cast<size_t>(r) * out_w + q) * c;
      for (int k = 0; k < c; ++k) {
        const double top = p00[k] + (p01[k] - p00[k]) * wx;
        const double bot = p10[k] + (p11[k] - p10[k]) * wx;
        o[k] = static_cast<float>(top + (bot - top) * wy);
      }
    }
  }
  return out;
}

Tensor load_image(const std::string& path, int target_h, int target_w) {
  return resize_bilinear(image_to_tensor(decode_image(path)), target_h, target_w);
}

}  // namespace statenet
