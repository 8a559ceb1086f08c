#include "statenet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace statenet {

void Layer::require_cache(bool ok) const {
  if (!ok) {
    throw StateError(std::string(kind()) + ": backward called before forward");
  }
}

namespace {

// Copies image ni of an NHWC batch into a standalone 1xHxWxC tensor.
Tensor slice_image(const Tensor& x, int ni) {
  const Shape4 s = Shape4::of(x);
  const size_t img = static_cast<size_t>(s.h) * s.w * s.c;
  Tensor out({1, s.h, s.w, s.c});
  std::memcpy(out.ptr(), x.ptr() + static_cast<size_t>(ni) * img, img * sizeof(float));
  return out;
}

Tensor column_sum(const Tensor& m) {
  const int rows = m.dim(0), cols = m.dim(1);
  Tensor out({cols});
  const float* pm = m.ptr();
  float* po = out.ptr();
  for (int r = 0; r < rows; ++r) {
    const float* row = pm + static_cast<size_t>(r) * cols;
    for (int j = 0; j < cols; ++j) po[j] += row[j];
  }
  return out;
}

void accumulate(Tensor& into, const Tensor& v) {
  float* a = into.ptr();
  const float* b = v.ptr();
  const size_t n = into.size();
  for (size_t i = 0; i < n; ++i) a[i] += b[i];
}

}  // namespace

// --- Conv2D -----------------------------------------------------------

Conv2D::Conv2D(int in_channels, int out_channels, int kernel_size)
    : in_channels_(in_channels), out_channels_(out_channels), ksize_(kernel_size),
      pad_(kernel_size / 2) {
  if (in_channels < 1 || out_channels < 1) {
    throw ValueError("conv2d: channel counts must be positive");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ValueError("conv2d: kernel size must be odd for same padding, got " +
                     std::to_string(kernel_size));
  }
  weight_ = Param{"weight", Tensor({ksize_, ksize_, in_channels_, out_channels_}),
                  Tensor({ksize_, ksize_, in_channels_, out_channels_})};
  bias_ = Param{"bias", Tensor({out_channels_}), Tensor({out_channels_})};
}

void Conv2D::init_params(Rng& rng) {
  // Kaiming-uniform, fan_in = kh*kw*cin; bias zero.
  const float fan_in = static_cast<float>(ksize_ * ksize_ * in_channels_);
  const float bound = std::sqrt(6.0f / fan_in);
  for (auto& v : weight_.value.data) v = rng.uniform(-bound, bound);
  std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0f);
}

std::vector<int> Conv2D::output_shape(const std::vector<int>& in) const {
  if (in.size() != 3) {
    throw ShapeError("conv2d: expected [h,w,c] input, got " + Tensor::shape_str(in));
  }
  if (in[2] != in_channels_) {
    throw ShapeError("conv2d: input channels " + std::to_string(in[2]) +
                     " do not match weight channels " + std::to_string(in_channels_));
  }
  // stride 1 + same padding preserves h and w.
  return {in[0], in[1], out_channels_};
}

Tensor Conv2D::forward(const Tensor& x, const ForwardCtx&) {
  const Shape4 s = Shape4::of(x);
  if (s.c != in_channels_) {
    throw ShapeError("conv2d: input " + Tensor::shape_str(x.shape) +
                     " has channels " + std::to_string(s.c) + ", weight expects " +
                     std::to_string(in_channels_));
  }
  cache_x_ = x;
  has_cache_ = true;

  const Tensor wmat({ksize_ * ksize_ * in_channels_, out_channels_}, weight_.value.data);
  Tensor y({s.n, s.h, s.w, out_channels_});
  const size_t img_out = static_cast<size_t>(s.h) * s.w * out_channels_;
  for (int ni = 0; ni < s.n; ++ni) {
    const Tensor xi = slice_image(x, ni);
    const Tensor col = im2col(xi, ksize_, ksize_, 1, pad_);
    Tensor ymat = add_row_bias(matmul(col, wmat), bias_.value);
    std::memcpy(y.ptr() + static_cast<size_t>(ni) * img_out, ymat.ptr(),
                img_out * sizeof(float));
  }
  return y;
}

Tensor Conv2D::backward(const Tensor& dy) {
  require_cache(has_cache_);
  const Shape4 s = Shape4::of(cache_x_);
  const Shape4 ds = Shape4::of(dy);
  if (ds.n != s.n || ds.h != s.h || ds.w != s.w || ds.c != out_channels_) {
    throw ShapeError("conv2d backward: dy " + Tensor::shape_str(dy.shape) +
                     " does not match forward output [" + std::to_string(s.n) + "," +
                     std::to_string(s.h) + "," + std::to_string(s.w) + "," +
                     std::to_string(out_channels_) + "]");
  }
  zero_grads();
  const Tensor wmat({ksize_ * ksize_ * in_channels_, out_channels_}, weight_.value.data);
  const Tensor wT = transpose(wmat);
  Tensor wgrad_mat({ksize_ * ksize_ * in_channels_, out_channels_});
  Tensor dx({s.n, s.h, s.w, s.c});

  const size_t img_in = static_cast<size_t>(s.h) * s.w * s.c;
  const size_t img_out = static_cast<size_t>(s.h) * s.w * out_channels_;
  for (int ni = 0; ni < s.n; ++ni) {
    Tensor dym({s.h * s.w, out_channels_});
    std::memcpy(dym.ptr(), dy.ptr() + static_cast<size_t>(ni) * img_out,
                img_out * sizeof(float));
    const Tensor xi = slice_image(cache_x_, ni);
    const Tensor col = im2col(xi, ksize_, ksize_, 1, pad_);
    accumulate(wgrad_mat, matmul(transpose(col), dym));
    accumulate(bias_.grad, column_sum(dym));
    const Tensor dcol = matmul(dym, wT);
    const Tensor dxi = col2im(dcol, Shape4{1, s.h, s.w, s.c}, ksize_, ksize_, 1, pad_);
    std::memcpy(dx.ptr() + static_cast<size_t>(ni) * img_in, dxi.ptr(),
                img_in * sizeof(float));
  }
  weight_.grad.data = std::move(wgrad_mat.data);
  return dx;
}

// --- MaxPool2D ---------------------------------------------------------

std::vector<int> MaxPool2D::output_shape(const std::vector<int>& in) const {
  if (in.size() != 3) {
    throw ShapeError("maxpool2d: expected [h,w,c] input, got " + Tensor::shape_str(in));
  }
  if (in[0] < 2 || in[1] < 2) {
    throw ShapeError("maxpool2d: spatial extent " + std::to_string(in[0]) + "x" +
                     std::to_string(in[1]) + " is smaller than the 2x2 window");
  }
  return {in[0] / 2, in[1] / 2, in[2]};
}

Tensor MaxPool2D::forward(const Tensor& x, const ForwardCtx&) {
  const Shape4 s = Shape4::of(x);
  if (s.h < 2 || s.w < 2) {
    throw ShapeError("maxpool2d: input " + Tensor::shape_str(x.shape) +
                     " is smaller than the 2x2 window");
  }
  const int oh = s.h / 2, ow = s.w / 2;
  Tensor y({s.n, oh, ow, s.c});
  argmax_.assign(y.size(), 0);
  in_shape_ = x.shape;
  has_cache_ = true;

  const float* src = x.ptr();
  float* dst = y.ptr();
  const size_t rowpix = static_cast<size_t>(s.w) * s.c;
  const size_t img = static_cast<size_t>(s.h) * rowpix;
  size_t o = 0;
  for (int ni = 0; ni < s.n; ++ni) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ci = 0; ci < s.c; ++ci, ++o) {
          // Window scan in row-major order; strict > keeps the first
          // maximum, which pins backward routing on ties.
          size_t best = static_cast<size_t>(ni) * img +
                        static_cast<size_t>(2 * oy) * rowpix +
                        static_cast<size_t>(2 * ox) * s.c + ci;
          float bestv = src[best];
          for (int ky = 0; ky < 2; ++ky) {
            for (int kx = 0; kx < 2; ++kx) {
              const size_t idx = static_cast<size_t>(ni) * img +
                                 static_cast<size_t>(2 * oy + ky) * rowpix +
                                 static_cast<size_t>(2 * ox + kx) * s.c + ci;
              if (src[idx] > bestv) {
                bestv = src[idx];
                best = idx;
              }
            }
          }
          dst[o] = bestv;
          argmax_[o] = static_cast<uint32_t>(best);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2D::backward(const Tensor& dy) {
  require_cache(has_cache_);
  const int oh = in_shape_[1] / 2, ow = in_shape_[2] / 2;
  const std::vector<int> want{in_shape_[0], oh, ow, in_shape_[3]};
  if (dy.shape != want) {
    throw ShapeError("maxpool2d backward: dy " + Tensor::shape_str(dy.shape) +
                     " does not match forward output " + Tensor::shape_str(want));
  }
  Tensor dx(in_shape_);
  float* pdx = dx.ptr();
  const float* pdy = dy.ptr();
  for (size_t o = 0; o < dy.size(); ++o) pdx[argmax_[o]] += pdy[o];
  return dx;
}

// --- Dense ---------------------------------------------------------------

Dense::Dense(int in_features, int units) : in_features_(in_features), units_(units) {
  if (in_features < 1 || units < 1) {
    throw ValueError("dense: feature counts must be positive");
  }
  weight_ = Param{"weight", Tensor({in_features_, units_}), Tensor({in_features_, units_})};
  bias_ = Param{"bias", Tensor({units_}), Tensor({units_})};
}

void Dense::init_params(Rng& rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(in_features_));
  for (auto& v : weight_.value.data) v = rng.uniform(-bound, bound);
  std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0f);
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
  if (in.size() != 1 || in[0] != in_features_) {
    throw ShapeError("dense: input " + Tensor::shape_str(in) + " does not match weight rows [" +
                     std::to_string(in_features_) + "]");
  }
  return {units_};
}

Tensor Dense::forward(const Tensor& x, const ForwardCtx&) {
  if (x.ndim() != 2 || x.dim(1) != in_features_) {
    throw ShapeError("dense: input " + Tensor::shape_str(x.shape) +
                     " does not match weight " + Tensor::shape_str(weight_.value.shape));
  }
  cache_x_ = x;
  has_cache_ = true;
  return add_row_bias(matmul(x, weight_.value), bias_.value);
}

Tensor Dense::backward(const Tensor& dy) {
  require_cache(has_cache_);
  if (dy.ndim() != 2 || dy.dim(0) != cache_x_.dim(0) || dy.dim(1) != units_) {
    throw ShapeError("dense backward: dy " + Tensor::shape_str(dy.shape) +
                     " does not match output [" + std::to_string(cache_x_.dim(0)) + "," +
                     std::to_string(units_) + "]");
  }
  weight_.grad = matmul(transpose(cache_x_), dy);
  bias_.grad = column_sum(dy);
  return matmul(dy, transpose(weight_.value));
}

// --- Flatten ----------------------------------------------------------

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
  if (in.size() != 3) {
    throw ShapeError("flatten: expected [h,w,c] input, got " + Tensor::shape_str(in));
  }
  return {in[0] * in[1] * in[2]};
}

Tensor Flatten::forward(const Tensor& x, const ForwardCtx&) {
  const Shape4 s = Shape4::of(x);
  in_shape_ = x.shape;
  has_cache_ = true;
  return Tensor({s.n, s.h * s.w * s.c}, x.data);
}

Tensor Flatten::backward(const Tensor& dy) {
  require_cache(has_cache_);
  const size_t want = Tensor::check_dims(in_shape_);
  if (dy.size() != want) {
    throw ShapeError("flatten backward: dy " + Tensor::shape_str(dy.shape) +
                     " cannot reshape to " + Tensor::shape_str(in_shape_));
  }
  return Tensor(in_shape_, dy.data);
}

// --- ReLU ------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, const ForwardCtx&) {
  in_shape_ = x.shape;
  positive_.resize(x.size());
  Tensor y(x.shape);
  const float* px = x.ptr();
  float* py = y.ptr();
  for (size_t i = 0; i < x.size(); ++i) {
    const bool pos = px[i] > 0.0f;
    positive_[i] = pos ? 1 : 0;
    py[i] = pos ? px[i] : 0.0f;
  }
  has_cache_ = true;
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  require_cache(has_cache_);
  if (dy.shape != in_shape_) {
    throw ShapeError("relu backward: dy " + Tensor::shape_str(dy.shape) +
                     " does not match input " + Tensor::shape_str(in_shape_));
  }
  Tensor dx(dy.shape);
  const float* pdy = dy.ptr();
  float* pdx = dx.ptr();
  for (size_t i = 0; i < dy.size(); ++i) pdx[i] = positive_[i] ? pdy[i] : 0.0f;
  return dx;
}

// --- Dropout -----------------------------------------------------------

Dropout::Dropout(float p) : p_(p) {
  if (!(p >= 0.0f && p < 1.0f)) {
    throw ValueError("dropout: rate must be in [0,1), got " + std::to_string(p));
  }
}

Tensor Dropout::forward(const Tensor& x, const ForwardCtx& ctx) {
  has_cache_ = true;
  if (!ctx.training || p_ == 0.0f) {
    identity_pass_ = true;
    scaled_mask_.clear();
    return x;
  }
  if (ctx.rng == nullptr) {
    throw StateError("dropout: training forward requires an rng");
  }
  identity_pass_ = false;
  const float keep_scale = 1.0f / (1.0f - p_);
  scaled_mask_.resize(x.size());
  Tensor y(x.shape);
  const float* px = x.ptr();
  float* py = y.ptr();
  for (size_t i = 0; i < x.size(); ++i) {
    const float m = ctx.rng->bernoulli(1.0f - p_) ? keep_scale : 0.0f;
    scaled_mask_[i] = m;
    py[i] = px[i] * m;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  require_cache(has_cache_);
  if (identity_pass_) return dy;
  if (dy.size() != scaled_mask_.size()) {
    throw ShapeError("dropout backward: dy " + Tensor::shape_str(dy.shape) +
                     " does not match cached mask of " + std::to_string(scaled_mask_.size()) +
                     " elements");
  }
  Tensor dx(dy.shape);
  const float* pdy = dy.ptr();
  float* pdx = dx.ptr();
  for (size_t i = 0; i < dy.size(); ++i) pdx[i] = pdy[i] * scaled_mask_[i];
  return dx;
}

// --- Softmax + cross-entropy ----------------------------------------

Tensor softmax_rows(const Tensor& logits) {
  if (logits.ndim() != 2) {
    throw ShapeError("softmax: expected 2-d logits, got " + Tensor::shape_str(logits.shape));
  }
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor probs({n, k});
  const float* pl = logits.ptr();
  float* pp = probs.ptr();
  for (int r = 0; r < n; ++r) {
    const float* row = pl + static_cast<size_t>(r) * k;
    float* out = pp + static_cast<size_t>(r) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += std::exp(static_cast<double>(row[j]) - mx);
    for (int j = 0; j < k; ++j) {
      out[j] = static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / total);
    }
  }
  return probs;
}

SoftmaxXentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.ndim() != 2) {
    throw ShapeError("softmax_xent: expected 2-d logits, got " +
                     Tensor::shape_str(logits.shape));
  }
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw ValueError("softmax_xent: label " + std::to_string(label) +
                       " out of range [0," + std::to_string(k - 1) + "]");
    }
  }

  SoftmaxXentResult res;
  res.probs = Tensor({n, k});
  res.dlogits = Tensor({n, k});
  const float* pl = logits.ptr();
  float* pp = res.probs.ptr();
  float* pd = res.dlogits.ptr();
  double loss_total = 0.0;
  for (int r = 0; r < n; ++r) {
    const float* row = pl + static_cast<size_t>(r) * k;
    float* prow = pp + static_cast<size_t>(r) * k;
    float* drow = pd + static_cast<size_t>(r) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += std::exp(static_cast<double>(row[j]) - mx);
    const int y = labels[static_cast<size_t>(r)];
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - mx) / total;
      prow[j] = static_cast<float>(p);
      drow[j] = static_cast<float>((p - (j == y ? 1.0 : 0.0)) / n);
    }
    loss_total += -(static_cast<double>(row[y]) - mx - std::log(total));
  }
  res.loss = loss_total / n;
  return res;
}

}  // namespace statenet
