#include "statenet/tensor.hpp"

#include <algorithm>
#include <cstring>

#include "statenet/parallel.hpp"

namespace statenet {

size_t Tensor::check_dims(const std::vector<int>& dims) {
  size_t total = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_str(dims));
    total *= static_cast<size_t>(d);
  }
  return total;
}

std::string Tensor::shape_str(const std::vector<int>& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::string Shape4::str() const {
  return Tensor::shape_str({n, h, w, c});
}

Shape4 Shape4::of(const Tensor& t) {
  if (t.ndim() != 4) {
    throw ShapeError("expected NHWC tensor, got " + Tensor::shape_str(t.shape));
  }
  Shape4 s{t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  return s;
}

namespace {

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string(op) + ": expected 2-d tensor, got " +
                     Tensor::shape_str(t.shape));
  }
}

}  // namespace

namespace {

// Saxpy row kernel, used for tile remainders: one output row accumulated
// directly in C with the k loop outermost.
void mm_rows(const float* __restrict__ A, const float* __restrict__ B,
             float* __restrict__ C, int k, int n, int i0, int rows, int j0,
             int cols) {
  for (int r = 0; r < rows; ++r) {
    float* __restrict__ crow = C + static_cast<size_t>(i0 + r) * n + j0;
    const float* __restrict__ arow = A + static_cast<size_t>(i0 + r) * k;
    for (int kk = 0; kk < k; ++kk) {
      const float aik = arow[kk];
      const float* __restrict__ bs = B + static_cast<size_t>(kk) * n + j0;
      for (int j = 0; j < cols; ++j) crow[j] += aik * bs[j];
    }
  }
}

#if defined(__GNUC__) || defined(__clang__)
#define STATENET_VECTOR_GEMM 1
// Eight-lane float vector with relaxed alignment so loads from arbitrary
// row offsets are legal.
typedef float v8f __attribute__((vector_size(32), aligned(4)));

// 4x16 register tile: eight named vector accumulators stay live across
// the whole k loop. Per output element the fma order over k matches the
// saxpy kernel, so results are bit-identical to it.
void mm_tile4x16(const float* __restrict__ A, const float* __restrict__ B,
                 float* __restrict__ C, int k, int n, int i0, int j0) {
  v8f c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
  const float* a0 = A + static_cast<size_t>(i0 + 0) * k;
  const float* a1 = A + static_cast<size_t>(i0 + 1) * k;
  const float* a2 = A + static_cast<size_t>(i0 + 2) * k;
  const float* a3 = A + static_cast<size_t>(i0 + 3) * k;
  for (int kk = 0; kk < k; ++kk) {
    const float* bs = B + static_cast<size_t>(kk) * n + j0;
    const v8f b0 = *reinterpret_cast<const v8f*>(bs);
    const v8f b1 = *reinterpret_cast<const v8f*>(bs + 8);
    const v8f av0 = v8f{} + a0[kk];
    const v8f av1 = v8f{} + a1[kk];
    const v8f av2 = v8f{} + a2[kk];
    const v8f av3 = v8f{} + a3[kk];
    c00 += av0 * b0;
    c01 += av0 * b1;
    c10 += av1 * b0;
    c11 += av1 * b1;
    c20 += av2 * b0;
    c21 += av2 * b1;
    c30 += av3 * b0;
    c31 += av3 * b1;
  }
  float* r0 = C + static_cast<size_t>(i0 + 0) * n + j0;
  float* r1 = C + static_cast<size_t>(i0 + 1) * n + j0;
  float* r2 = C + static_cast<size_t>(i0 + 2) * n + j0;
  float* r3 = C + static_cast<size_t>(i0 + 3) * n + j0;
  *reinterpret_cast<v8f*>(r0) = c00;
  *reinterpret_cast<v8f*>(r0 + 8) = c01;
  *reinterpret_cast<v8f*>(r1) = c10;
  *reinterpret_cast<v8f*>(r1 + 8) = c11;
  *reinterpret_cast<v8f*>(r2) = c20;
  *reinterpret_cast<v8f*>(r2 + 8) = c21;
  *reinterpret_cast<v8f*>(r3) = c30;
  *reinterpret_cast<v8f*>(r3 + 8) = c31;
}
#endif

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree " +
                     Tensor::shape_str(a.shape) + " x " + Tensor::shape_str(b.shape));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const float* __restrict__ A = a.ptr();
  const float* __restrict__ B = b.ptr();
  float* __restrict__ C = c.ptr();

#ifdef STATENET_VECTOR_GEMM
  constexpr int kTileRows = 4;
  constexpr int kTileCols = 16;
  const size_t row_tiles = (static_cast<size_t>(m) + kTileRows - 1) / kTileRows;
  parallel_for(0, row_tiles, [&](size_t tile) {
    const int i0 = static_cast<int>(tile) * kTileRows;
    const int rb = std::min(kTileRows, m - i0);
    const int jfull = n - n % kTileCols;
    if (rb == kTileRows) {
      for (int j0 = 0; j0 < jfull; j0 += kTileCols) mm_tile4x16(A, B, C, k, n, i0, j0);
      if (jfull < n) mm_rows(A, B, C, k, n, i0, kTileRows, jfull, n - jfull);
    } else {
      mm_rows(A, B, C, k, n, i0, rb, 0, n);
    }
  });
#else
  parallel_for(0, static_cast<size_t>(m), [&](size_t i) {
    mm_rows(A, B, C, k, n, static_cast<int>(i), 1, 0, n);
  });
#endif
  return c;
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  Tensor t({n, m});
  const float* src = a.ptr();
  float* dst = t.ptr();
  constexpr int kTile = 32;
  for (int i0 = 0; i0 < m; i0 += kTile) {
    const int i1 = std::min(i0 + kTile, m);
    for (int j0 = 0; j0 < n; j0 += kTile) {
      const int j1 = std::min(j0 + kTile, n);
      for (int i = i0; i < i1; ++i)
        for (int j = j0; j < j1; ++j)
          dst[static_cast<size_t>(j) * m + i] = src[static_cast<size_t>(i) * n + j];
    }
  }
  return t;
}

int conv_out_extent(int in, int k, int stride, int pad) {
  const int out = (in + 2 * pad - k) / stride + 1;
  if (out < 1) {
    throw ShapeError("window size " + std::to_string(k) + " exceeds padded extent " +
                     std::to_string(in + 2 * pad));
  }
  return out;
}

Tensor im2col(const Tensor& x, int kh, int kw, int stride, int pad) {
  const Shape4 s = Shape4::of(x);
  if (kh < 1 || kw < 1 || stride < 1 || pad < 0) {
    throw ValueError("im2col: bad window kh=" + std::to_string(kh) +
                     " kw=" + std::to_string(kw) + " stride=" + std::to_string(stride) +
                     " pad=" + std::to_string(pad));
  }
  const int oh = conv_out_extent(s.h, kh, stride, pad);
  const int ow = conv_out_extent(s.w, kw, stride, pad);
  const int patch = kh * kw * s.c;
  Tensor out({s.n * oh * ow, patch});
  const float* src = x.ptr();
  float* dst = out.ptr();
  const size_t rowlen = static_cast<size_t>(patch);
  const size_t img = static_cast<size_t>(s.h) * s.w * s.c;
  const size_t rowpix = static_cast<size_t>(s.w) * s.c;

  parallel_for(0, static_cast<size_t>(s.n) * oh * ow, [&](size_t r) {
    const int ni = static_cast<int>(r / (static_cast<size_t>(oh) * ow));
    const int rem = static_cast<int>(r % (static_cast<size_t>(oh) * ow));
    const int oy = rem / ow;
    const int ox = rem % ow;
    float* drow = dst + r * rowlen;
    const float* base = src + static_cast<size_t>(ni) * img;
    for (int ky = 0; ky < kh; ++ky) {
      const int iy = oy * stride - pad + ky;
      for (int kx = 0; kx < kw; ++kx) {
        const int ix = ox * stride - pad + kx;
        float* cell = drow + (static_cast<size_t>(ky) * kw + kx) * s.c;
        if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) {
          std::memset(cell, 0, sizeof(float) * static_cast<size_t>(s.c));
        } else {
          const float* px = base + static_cast<size_t>(iy) * rowpix +
                            static_cast<size_t>(ix) * s.c;
          std::memcpy(cell, px, sizeof(float) * static_cast<size_t>(s.c));
        }
      }
    }
  });
  return out;
}

Tensor col2im(const Tensor& cols, const Shape4& xshape, int kh, int kw,
              int stride, int pad) {
  require_2d(cols, "col2im");
  const int oh = conv_out_extent(xshape.h, kh, stride, pad);
  const int ow = conv_out_extent(xshape.w, kw, stride, pad);
  const int patch = kh * kw * xshape.c;
  if (cols.dim(0) != xshape.n * oh * ow || cols.dim(1) != patch) {
    throw ShapeError("col2im: patch matrix " + Tensor::shape_str(cols.shape) +
                     " does not match geometry " + xshape.str());
  }
  Tensor x({xshape.n, xshape.h, xshape.w, xshape.c});
  const float* src = cols.ptr();
  float* dst = x.ptr();
  const size_t img = static_cast<size_t>(xshape.h) * xshape.w * xshape.c;
  const size_t rowpix = static_cast<size_t>(xshape.w) * xshape.c;

  // Patches overlap, so rows are accumulated serially per image; the
  // per-image loop may not run concurrently over the same image.
  for (int ni = 0; ni < xshape.n; ++ni) {
    float* base = dst + static_cast<size_t>(ni) * img;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const size_t r = (static_cast<size_t>(ni) * oh + oy) * ow + ox;
        const float* srow = src + r * patch;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= xshape.h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= xshape.w) continue;
            const float* cell = srow + (static_cast<size_t>(ky) * kw + kx) * xshape.c;
            float* px = base + static_cast<size_t>(iy) * rowpix +
                        static_cast<size_t>(ix) * xshape.c;
            for (int ci = 0; ci < xshape.c; ++ci) px[ci] += cell[ci];
          }
        }
      }
    }
  }
  return x;
}

namespace {

Tensor binary_op(const Tensor& a, const Tensor& b, const char* name,
                 float (*op)(float, float)) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(name) + ": shape mismatch " +
                     Tensor::shape_str(a.shape) + " vs " + Tensor::shape_str(b.shape));
  }
  Tensor out(a.shape);
  const float* pa = a.ptr();
  const float* pb = b.ptr();
  float* po = out.ptr();
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) po[i] = op(pa[i], pb[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](float x, float y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](float x, float y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](float x, float y) { return x * y; });
}

Tensor scale(const Tensor& a, float s) {
  Tensor out(a.shape);
  const float* pa = a.ptr();
  float* po = out.ptr();
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] * s;
  return out;
}

Tensor max0(const Tensor& a) {
  Tensor out(a.shape);
  const float* pa = a.ptr();
  float* po = out.ptr();
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0f ? pa[i] : 0.0f;
  return out;
}

Tensor add_row_bias(const Tensor& m, const Tensor& bias) {
  require_2d(m, "add_row_bias");
  if (bias.ndim() != 1 || bias.dim(0) != m.dim(1)) {
    throw ShapeError("add_row_bias: bias " + Tensor::shape_str(bias.shape) +
                     " does not match row width of " + Tensor::shape_str(m.shape));
  }
  Tensor out(m.shape);
  const int rows = m.dim(0), cols = m.dim(1);
  const float* pm = m.ptr();
  const float* pb = bias.ptr();
  float* po = out.ptr();
  for (int r = 0; r < rows; ++r) {
    const float* src = pm + static_cast<size_t>(r) * cols;
    float* dst = po + static_cast<size_t>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j] + pb[j];
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& m) {
  require_2d(m, "argmax_rows");
  const int rows = m.dim(0), cols = m.dim(1);
  std::vector<int> out(static_cast<size_t>(rows), 0);
  const float* pm = m.ptr();
  for (int r = 0; r < rows; ++r) {
    const float* row = pm + static_cast<size_t>(r) * cols;
    int best = 0;
    for (int j = 1; j < cols; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

}  // namespace statenet
