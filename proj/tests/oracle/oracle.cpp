#include "oracle.hpp"

#include <cmath>
#include <limits>

namespace oracle {

std::vector<double> conv2d_same(const std::vector<double>& x, int n, int h, int w,
                                int cin, const std::vector<double>& k, int kh, int kw,
                                int cout, const std::vector<double>& bias) {
  const int ph = kh / 2, pw = kw / 2;
  std::vector<double> y(static_cast<size_t>(n) * h * w * cout, 0.0);
  for (int ni = 0; ni < n; ++ni) {
    for (int oy = 0; oy < h; ++oy) {
      for (int ox = 0; ox < w; ++ox) {
        for (int oc = 0; oc < cout; ++oc) {
          double acc = bias[static_cast<size_t>(oc)];
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy + ky - ph;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox + kx - pw;
              if (ix < 0 || ix >= w) continue;
              for (int ic = 0; ic < cin; ++ic) {
                const double xv =
                    x[((static_cast<size_t>(ni) * h + iy) * w + ix) * cin + ic];
                const double kv =
                    k[((static_cast<size_t>(ky) * kw + kx) * cin + ic) * cout + oc];
                acc += xv * kv;
              }
            }
          }
          y[((static_cast<size_t>(ni) * h + oy) * w + ox) * cout + oc] = acc;
        }
      }
    }
  }
  return y;
}

std::vector<double> maxpool2x2(const std::vector<double>& x, int n, int h, int w,
                               int c) {
  const int oh = h / 2, ow = w / 2;
  std::vector<double> y(static_cast<size_t>(n) * oh * ow * c);
  for (int ni = 0; ni < n; ++ni) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int iy = 2 * oy + dy, ix = 2 * ox + dx;
              const double v =
                  x[((static_cast<size_t>(ni) * h + iy) * w + ix) * c + ch];
              if (v > best) best = v;  // strict >: first max wins
            }
          }
          y[((static_cast<size_t>(ni) * oh + oy) * ow + ox) * c + ch] = best;
        }
      }
    }
  }
  return y;
}

std::vector<double> dense(const std::vector<double>& x, int n, int in,
                          const std::vector<double>& w,
                          const std::vector<double>& bias, int units) {
  std::vector<double> y(static_cast<size_t>(n) * units);
  for (int r = 0; r < n; ++r) {
    for (int u = 0; u < units; ++u) {
      double acc = bias[static_cast<size_t>(u)];
      for (int i = 0; i < in; ++i) {
        acc += x[static_cast<size_t>(r) * in + i] * w[static_cast<size_t>(i) * units + u];
      }
      y[static_cast<size_t>(r) * units + u] = acc;
    }
  }
  return y;
}

std::vector<double> relu(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : 0.0;
  return y;
}

std::vector<double> softmax(const std::vector<double>& logits, int n, int k) {
  std::vector<double> p(logits.size());
  for (int r = 0; r < n; ++r) {
    const double* row = logits.data() + static_cast<size_t>(r) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (int j = 0; j < k; ++j) {
      p[static_cast<size_t>(r) * k + j] = std::exp(row[j] - mx) / z;
    }
  }
  return p;
}

double xent_loss(const std::vector<double>& logits, int n, int k,
                 const std::vector<int>& labels) {
  double total = 0;
  for (int r = 0; r < n; ++r) {
    const double* row = logits.data() + static_cast<size_t>(r) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    total -= row[labels[static_cast<size_t>(r)]] - mx - std::log(z);
  }
  return total / n;
}

double ScalarOpt::step(double theta, double g) {
  ++t;
  double next = theta;
  switch (kind) {
    case sgd:
      next = theta - lr * g;
      break;
    case adagrad:
      v += g * g;
      next = theta - lr * g / (std::sqrt(v) + eps);
      break;
    case rmsprop:
      v = rho * v + (1 - rho) * g * g;
      next = theta - lr * g / (std::sqrt(v) + eps);
      break;
    case adam: {
      m = beta1 * m + (1 - beta1) * g;
      v = beta2 * v + (1 - beta2) * g * g;
      const double mh = m / (1 - std::pow(beta1, t));
      const double vh = v / (1 - std::pow(beta2, t));
      next = theta - lr * mh / (std::sqrt(vh) + eps);
      break;
    }
    case adamax: {
      m = beta1 * m + (1 - beta1) * g;
      v = std::max(beta2 * v, std::fabs(g));
      const double mh = m / (1 - std::pow(beta1, t));
      next = theta - lr * mh / (v + eps);
      break;
    }
    case nadam: {
      m = beta1 * m + (1 - beta1) * g;
      v = beta2 * v + (1 - beta2) * g * g;
      const double bc1 = 1 - std::pow(beta1, t);
      const double mh = m / bc1;
      const double vh = v / (1 - std::pow(beta2, t));
      next = theta - lr * (beta1 * mh + (1 - beta1) * g / bc1) / (std::sqrt(vh) + eps);
      break;
    }
  }
  // The framework stores parameters as f32; mirror that rounding.
  return static_cast<double>(static_cast<float>(next));
}

}  // namespace oracle
