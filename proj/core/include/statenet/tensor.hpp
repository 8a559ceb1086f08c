#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "statenet/error.hpp"

namespace statenet {

// Dense row-major float32 tensor (last axis fastest). Images and
// activations use NHWC order. Tensors are values: operations return new
// tensors, and only optimizer entry points mutate data in place.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
    data.assign(check_dims(shape), 0.0f);
  }

  Tensor(std::vector<int> dims, std::vector<float> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (check_dims(shape) != data.size()) {
      throw ShapeError("tensor: " + shape_str(shape) + " expects " +
                       std::to_string(check_dims(shape)) + " values, got " +
                       std::to_string(data.size()));
    }
  }

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

  static Tensor full(std::vector<int> dims, float v) {
    Tensor t(std::move(dims));
    for (auto& x : t.data) x = v;
    return t;
  }

  size_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  static size_t check_dims(const std::vector<int>& dims);
  static std::string shape_str(const std::vector<int>& dims);

  // Arity assertion with the caller's name in the message.
  static void require_ndim(const Tensor& t, int ndim, const char* who) {
    if (t.ndim() != ndim) {
      throw ShapeError(std::string(who) + ": expected a " + std::to_string(ndim) +
                       "-d tensor, got " + shape_str(t.shape));
    }
  }
};

// Batch-of-images geometry, NHWC.
struct Shape4 {
  int n = 1;
  int h = 1;
  int w = 1;
  int c = 1;

  size_t size() const {
    return static_cast<size_t>(n) * static_cast<size_t>(h) *
           static_cast<size_t>(w) * static_cast<size_t>(c);
  }
  bool valid() const { return n >= 1 && h >= 1 && w >= 1 && c >= 1; }
  std::string str() const;

  static Shape4 of(const Tensor& t);
};

// --- Numeric kernels -------------------------------------------------

// C[m,n] = A[m,k] * B[k,n]. Accumulates in float32, ascending k per
// output element, so results are identical for any thread count.
Tensor matmul(const Tensor& a, const Tensor& b);

// B[n,m] = A[m,n]^T, tiled for cache behavior.
Tensor transpose(const Tensor& a);

// Patch matrix for convolution-as-matmul. Input NHWC; row r holds the
// receptive field of output position r laid out (ky, kx, channel) with
// channel fastest; zero padding. Output [(n*oh*ow) x (kh*kw*c)].
Tensor im2col(const Tensor& x, int kh, int kw, int stride, int pad);

// Adjoint of im2col: scatter-adds patch rows back into an NHWC tensor
// of the given geometry. Out-of-bounds (padding) entries are dropped.
Tensor col2im(const Tensor& cols, const Shape4& xshape, int kh, int kw,
              int stride, int pad);

// Output spatial extent of a convolution/pooling window, or throws.
int conv_out_extent(int in, int k, int stride, int pad);

// Elementwise ops. Binary forms require identical shapes; the only
// broadcast in the library is the explicit per-channel bias add below.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor max0(const Tensor& a);  // ReLU kernel

// M[r,j] + bias[j] for every row r. Used for dense-layer bias and, via
// the im2col layout, per-output-channel conv bias.
Tensor add_row_bias(const Tensor& m, const Tensor& bias);

// Row-wise argmax of a 2-d tensor; ties resolve to the first maximum.
std::vector<int> argmax_rows(const Tensor& m);

}  // namespace statenet
