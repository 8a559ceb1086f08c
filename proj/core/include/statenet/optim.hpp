#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "statenet/layers.hpp"
#include "statenet/model.hpp"

namespace statenet {

enum class OptKind { sgd, adagrad, rmsprop, adam, adamax, nadam };

// Parses the CLI spelling ("adam", "rmsprop", ...). Unknown names throw.
OptKind parse_optimizer(const std::string& name);
std::string to_string(OptKind kind);

struct OptimizerConfig {
  OptKind kind = OptKind::adam;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double eps = 1e-8;
  double momentum = 0.0;  // sgd only; 0 keeps the plain rule
};

// One of the six first-order update rules, applied in place to every
// trainable parameter. Slots are created lazily per parameter and live in
// double precision; parameters stay f32. One apply_step advances t by 1.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {});

  // Updates all trainable params of the model. Throws StateError unless a
  // backward pass has populated gradients since the last zero_grads.
  void apply_step(Model& model);

  // Lower-level entry point for callers that manage Params directly
  // (tests, single-tensor problems). No grad-freshness check.
  void apply_step(const std::vector<Param*>& params);

  // Drops all slots and rewinds t to 0; the next step behaves like the
  // first step of a fresh optimizer.
  void reset();

  const OptimizerConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<double> a;  // first moment / squared-grad accumulator / velocity
    std::vector<double> b;  // second moment / infinity norm
  };
  Slot& slot_for(Param* p);

  OptimizerConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<Param*, Slot> slots_;
};

}  // namespace statenet
