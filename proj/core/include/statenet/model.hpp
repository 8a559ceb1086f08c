#pragma once

#include <memory>
#include <string>
#include <vector>

#include "statenet/layers.hpp"
#include "statenet/tensor.hpp"

namespace statenet {

// Build-time description of the network. The head is fixed; the base
// depth, freezing, input geometry and class count are the knobs.
struct ModelSpec {
  Shape4 input{1, 150, 150, 3};
  int base_blocks = 4;
  std::vector<int> frozen_blocks{1, 2, 3, 4};  // default: entire retained base
  int class_count = 11;
  // Head regularization. The stock head uses .25 after each conv group and
  // .5 after the 512 dense layer; 0 disables a stage (for ablations).
  float conv_dropout = 0.25f;
  float dense_dropout = 0.5f;
};

// A sequential stack of layers. Layers with parameters carry stable
// names (block1_conv1, head_dense2, ...) used by the weight container.
// Block ids: 1..5 for VGG base blocks, 0 for head layers.
class Model {
 public:
  struct Entry {
    std::string name;
    int block = 0;
    std::unique_ptr<Layer> layer;
  };

  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  void append(std::string name, int block, std::unique_ptr<Layer> layer);

  // Full forward to logits. Input must match the build geometry.
  Tensor forward(const Tensor& x, const ForwardCtx& ctx);

  // Reverse pass from dlogits; fills every layer's gradients and marks
  // them ready for an optimizer step.
  Tensor backward(const Tensor& dlogits);

  void zero_grads();
  bool grads_ready() const { return grads_ready_; }

  size_t layer_count() const { return entries_.size(); }
  Entry& entry(size_t i) { return entries_[i]; }
  const Entry& entry(size_t i) const { return entries_[i]; }

  // Parameter views in layer order.
  struct NamedParam {
    std::string layer_name;
    int block;
    bool trainable;
    Param* param;
  };
  std::vector<NamedParam> named_params();

  Shape4 input_shape() const { return input_; }
  void set_input_shape(const Shape4& s) { input_ = s; }
  int class_count() const { return class_count_; }
  void set_class_count(int c) { class_count_ = c; }
  int base_block_count() const;

  // Shape of the final layer's output (batch dimension excluded),
  // validating the whole chain.
  std::vector<int> output_shape() const;

  // Per-entry shape chain, one entry per layer, starting from the input.
  std::vector<std::vector<int>> shape_chain() const;

 private:
  std::vector<Entry> entries_;
  Shape4 input_{1, 150, 150, 3};
  int class_count_ = 0;
  bool grads_ready_ = false;
};

// The first `base_blocks` VGG19 feature blocks: (2,2,4,4,4) convolutions
// of (64,128,256,512,512) channels, 3x3 same padding, ReLU after every
// convolution, 2x2/stride-2 max pool closing each block. No classifier.
Model build_vgg19_base(const Shape4& input, int base_blocks, Rng& rng);

// Appends the modified classification head:
//   (conv32, conv32, pool, drop .25) (conv64, conv64, pool, drop .25)
//   (conv64, conv64, pool, drop .25) flatten, dense512, drop .5,
//   dense(class_count).
// ReLU follows every convolution and the 512 dense layer. Requires the
// base output spatial extent to be at least 8 so the three pool stages
// stay valid.
Model assemble_modified_head(Model base, int class_count, Rng& rng,
                             float conv_dropout = 0.25f, float dense_dropout = 0.5f);

// Marks every layer of the listed base blocks non-trainable and all
// head layers trainable. Unknown block indices throw.
void freeze(Model& model, const std::vector<int>& frozen_blocks);

/// Convenience: base + head + freeze, seeded. Pure function of
// (spec, seed): equal inputs give bit-identical parameters.
Model build_model(const ModelSpec& spec, uint64_t seed);

// --- Weight container -------------------------------------------------
//
// save_weights writes <prefix>.manifest.json and <prefix>.weights.bin.
// The manifest lists (layer, param, shape, byte offset, byte length) in
// layer order; the blob is raw little-endian float32. Round trips are
// bit-identical.
void save_weights(Model& model, const std::string& prefix);

// Fills parameters by (layer name, param name). Every model parameter
// must be present in the file unless allow_partial, in which case
// missing ones keep their initialization. Shape mismatches, unknown
// layer names, unsupported versions and truncated blobs throw.
void load_weights(Model& model, const std::string& prefix, bool allow_partial = false);

}  // namespace statenet
