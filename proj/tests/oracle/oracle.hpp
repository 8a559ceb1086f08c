#pragma once

// Independent double-precision reference implementations used to check the
// production kernels. Everything here is written as plain naive loops on
// std::vector<double>, deliberately sharing no code with the library.

#include <cstdint>
#include <vector>

namespace oracle {

// Same-padded stride-1 convolution, NHWC activations, [kh,kw,cin,cout]
// kernel, per-output-channel bias.
std::vector<double> conv2d_same(const std::vector<double>& x, int n, int h, int w,
                                int cin, const std::vector<double>& k, int kh, int kw,
                                int cout, const std::vector<double>& bias);

// 2x2 stride-2 max pooling, ties to the first element in row-major window
// order, trailing odd row/column dropped.
std::vector<double> maxpool2x2(const std::vector<double>& x, int n, int h, int w,
                               int c);

// Row-major [n,in] x [in,units] + bias.
std::vector<double> dense(const std::vector<double>& x, int n, int in,
                          const std::vector<double>& w,
                          const std::vector<double>& bias, int units);

std::vector<double> relu(const std::vector<double>& x);

// Row-stabilized softmax probabilities for [n,k] logits.
std::vector<double> softmax(const std::vector<double>& logits, int n, int k);

// Mean cross-entropy of softmax(logits) against integer labels.
double xent_loss(const std::vector<double>& logits, int n, int k,
                 const std::vector<int>& labels);

// --- Scalar optimizer oracle ------------------------------------------

// One-parameter state for the six update rules. Math in double; theta is
// rounded through float after every step, mirroring the framework's f32
// parameter storage contract.
struct ScalarOpt {
  enum Kind { sgd, adagrad, rmsprop, adam, adamax, nadam };
  Kind kind = sgd;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double eps = 1e-8;

  double m = 0;   // first moment
  double v = 0;   // second moment / squared-grad accumulator / inf norm
  long t = 0;

  // Applies one update to theta given gradient g, returns the new theta.
  double step(double theta, double g);
};

}  // namespace oracle
