#include "statenet/optim.hpp"

#include <cmath>
#include <cstdlib>

#include "statenet/error.hpp"

namespace statenet {

OptKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptKind::sgd;
  if (name == "adagrad") return OptKind::adagrad;
  if (name == "rmsprop") return OptKind::rmsprop;
  if (name == "adam") return OptKind::adam;
  if (name == "adamax") return OptKind::adamax;
  if (name == "nadam") return OptKind::nadam;
  throw ValueError("unknown optimizer '" + name +
                   "' (expected sgd, adagrad, rmsprop, adam, adamax or nadam)");
}

std::string to_string(OptKind kind) {
  switch (kind) {
    case OptKind::sgd: return "sgd";
    case OptKind::adagrad: return "adagrad";
    case OptKind::rmsprop: return "rmsprop";
    case OptKind::adam: return "adam";
    case OptKind::adamax: return "adamax";
    case OptKind::nadam: return "nadam";
  }
  return "?";
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  if (cfg_.lr < 0) throw ValueError("optimizer: learning rate must not be negative");
}

Optimizer::Slot& Optimizer::slot_for(Param* p) {
  Slot& s = slots_[p];
  if (s.a.empty()) {
    const size_t n = p->value.size();
    switch (cfg_.kind) {
      case OptKind::sgd:
        if (cfg_.momentum != 0.0) s.a.assign(n, 0.0);
        break;
      case OptKind::adagrad:
      case OptKind::rmsprop:
        s.a.assign(n, 0.0);
        break;
      case OptKind::adam:
      case OptKind::adamax:
      case OptKind::nadam:
        s.a.assign(n, 0.0);
        s.b.assign(n, 0.0);
        break;
    }
  }
  return s;
}

void Optimizer::apply_step(Model& model) {
  if (!model.grads_ready()) {
    throw StateError("optimizer: apply_step called before a backward pass populated gradients");
  }
  std::vector<Param*> trainable;
  for (auto& np : model.named_params()) {
    if (np.trainable) trainable.push_back(np.param);
  }
  apply_step(trainable);
}

void Optimizer::apply_step(const std::vector<Param*>& params) {
  ++t_;
  const double lr = cfg_.lr;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2, rho = cfg_.rho, eps = cfg_.eps;
  const double b1t = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double b2t = 1.0 - std::pow(b2, static_cast<double>(t_));

  for (Param* p : params) {
    if (p->grad.size() != p->value.size()) {
      throw StateError("optimizer: gradient for '" + p->name +
                       "' does not match its parameter");
    }
    float* th = p->value.ptr();
    const float* gr = p->grad.ptr();
    const size_t n = p->value.size();
    Slot& s = slot_for(p);

    switch (cfg_.kind) {
      case OptKind::sgd:
        if (cfg_.momentum == 0.0) {
          for (size_t i = 0; i < n; ++i) {
            th[i] = static_cast<float>(static_cast<double>(th[i]) - lr * gr[i]);
          }
        } else {
          for (size_t i = 0; i < n; ++i) {
            s.a[i] = cfg_.momentum * s.a[i] + gr[i];
            th[i] = static_cast<float>(static_cast<double>(th[i]) - lr * s.a[i]);
          }
        }
        break;
      case OptKind::adagrad:
        for (size_t i = 0; i < n; ++i) {
          const double g = gr[i];
          s.a[i] += g * g;
          th[i] = static_cast<float>(static_cast<double>(th[i]) -
                                     lr * g / (std::sqrt(s.a[i]) + eps));
        }
        break;
      case OptKind::rmsprop:
        for (size_t i = 0; i < n; ++i) {
          const double g = gr[i];
          s.a[i] = rho * s.a[i] + (1.0 - rho) * g * g;
          th[i] = static_cast<float>(static_cast<double>(th[i]) -
                                     lr * g / (std::sqrt(s.a[i]) + eps));
        }
        break;
      case OptKind::adam:
        for (size_t i = 0; i < n; ++i) {
          const double g = gr[i];
          s.a[i] = b1 * s.a[i] + (1.0 - b1) * g;
          s.b[i] = b2 * s.b[i] + (1.0 - b2) * g * g;
          const double mh = s.a[i] / b1t;
          const double vh = s.b[i] / b2t;
          th[i] = static_cast<float>(static_cast<double>(th[i]) -
                                     lr * mh / (std::sqrt(vh) + eps));
        }
        break;
      case OptKind::adamax:
        for (size_t i = 0; i < n; ++i) {
          const double g = gr[i];
          s.a[i] = b1 * s.a[i] + (1.0 - b1) * g;
          s.b[i] = std::max(b2 * s.b[i], std::abs(g));
          const double mh = s.a[i] / b1t;
          th[i] = static_cast<float>(static_cast<double>(th[i]) -
                                     lr * mh / (s.b[i] + eps));
        }
        break;
      case OptKind::nadam:
        for (size_t i = 0; i < n; ++i) {
          const double g = gr[i];
          s.a[i] = b1 * s.a[i] + (1.0 - b1) * g;
          s.b[i] = b2 * s.b[i] + (1.0 - b2) * g * g;
          const double mh = s.a[i] / b1t;
          const double vh = s.b[i] / b2t;
          const double num = b1 * mh + (1.0 - b1) * g / b1t;
          th[i] = static_cast<float>(static_cast<double>(th[i]) -
                                     lr * num / (std::sqrt(vh) + eps));
        }
        break;
    }
  }
}

void Optimizer::reset() {
  slots_.clear();
  t_ = 0;
}

}  // namespace statenet
