#pragma once

#include <memory>
#include <string>
#include <vector>

#include "statenet/rng.hpp"
#include "statenet/tensor.hpp"

namespace statenet {

// Per-call context for forward passes. The rng is injected, never
// global; only dropout consumes it, and only in training mode.
struct ForwardCtx {
  Rng* rng = nullptr;
  bool training = false;
};

// A named parameter with its gradient. Shapes always match.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// A differentiable layer. forward caches whatever backward needs;
// backward fills parameter gradients (overwriting, not accumulating)
// and returns the gradient w.r.t. its input. Each instance is
// single-owner during a forward/backward pair.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const char* kind() const = 0;

  // Shape propagation without a batch dimension ({h,w,c} or {k});
  // throws ShapeError when the layer cannot accept the input.
  virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;

  virtual Tensor forward(const Tensor& x, const ForwardCtx& ctx) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;

  virtual std::vector<Param*> params() { return {}; }
  virtual void init_params(Rng&) {}

  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }

  void zero_grads() {
    for (Param* p : params()) {
      std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0f);
    }
  }

 protected:
  void require_cache(bool ok) const;
  bool trainable_ = true;
};

// 3x3 (or any odd size) convolution, stride 1, "same" zero padding,
// realized as im2col + one matmul per image. Weight layout is
// [kh, kw, cin, cout]; flattened it is exactly the im2col operand.
class Conv2D : public Layer {
 public:
  Conv2D(int in_channels, int out_channels, int kernel_size = 3);

  const char* kind() const override { return "conv2d"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override;
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init_params(Rng& rng) override;

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  int kernel_size() const { return ksize_; }

 private:
  int in_channels_;
  int out_channels_;
  int ksize_;
  int pad_;
  Param weight_;
  Param bias_;
  Tensor cache_x_;
  bool has_cache_ = false;
};

// 2x2 max pooling, stride 2 (VGG convention). Odd trailing rows and
// columns are dropped; ties go to the first element in row-major scan
// order so backward routing is deterministic.
class MaxPool2D : public Layer {
 public:
  const char* kind() const override { return "maxpool2d"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override;
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
  std::vector<uint32_t> argmax_;
  bool has_cache_ = false;
};

// Fully connected: y = x W + b with W[k, units].
class Dense : public Layer {
 public:
  Dense(int in_features, int units);

  const char* kind() const override { return "dense"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override;
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init_params(Rng& rng) override;

  int in_features() const { return in_features_; }
  int units() const { return units_; }

 private:
  int in_features_;
  int units_;
  Param weight_;
  Param bias_;
  Tensor cache_x_;
  bool has_cache_ = false;
};

// NHWC -> [n, h*w*c].
class Flatten : public Layer {
 public:
  const char* kind() const override { return "flatten"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override;
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
  bool has_cache_ = false;
};

class ReLU : public Layer {
 public:
  const char* kind() const override { return "relu"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
  std::vector<uint8_t> positive_;
  bool has_cache_ = false;
};

// Inverted dropout: training multiplies by mask/(1-p) so inference is
// the identity. The mask comes from the injected rng, one Bernoulli
// draw per element.
class Dropout : public Layer {
 public:
  explicit Dropout(float p);

  const char* kind() const override { return "dropout"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy) override;

  float rate() const { return p_; }

 private:
  float p_;
  std::vector<float> scaled_mask_;  // 0 or 1/(1-p) per element
  bool identity_pass_ = false;
  bool has_cache_ = false;
};

// Fused softmax + categorical cross-entropy head.
struct SoftmaxXentResult {
  double loss = 0.0;   // mean over the batch of -log p[label]
  Tensor probs;        // [n, classes], rows sum to 1
  Tensor dlogits;      // (probs - onehot) / n
};

// Numerically stable (row max subtracted). Labels are class indices in
// [0, classes); anything else throws ValueError.
SoftmaxXentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels);

// Row-wise softmax of a 2-d tensor (used by prediction).
Tensor softmax_rows(const Tensor& logits);

}  // namespace statenet
