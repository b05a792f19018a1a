#include "aenr/layers.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aenr::layers {

void SeparableConv(std::span<const double> in, int in_ch, int width,
                   std::span<const double> depthwise, int kernel,
                   std::span<const double> pointwise, std::span<const double> bias,
                   int out_ch, std::span<double> out) {
  const int pad = (kernel - 1) / 2;
  std::vector<double> mid(static_cast<std::size_t>(in_ch) * width);
  for (int c = 0; c < in_ch; ++c) {
    const double* k = &depthwise[static_cast<std::size_t>(c) * kernel];
    const double* x = &in[static_cast<std::size_t>(c) * width];
    for (int w = 0; w < width; ++w) {
      double acc = 0.0;
      for (int j = 0; j < kernel; ++j) {
        const int src = w + j - pad;
        if (src >= 0 && src < width) acc += k[j] * x[src];
      }
      mid[static_cast<std::size_t>(c) * width + w] = acc;
    }
  }
  for (int o = 0; o < out_ch; ++o) {
    const double* wrow = &pointwise[static_cast<std::size_t>(o) * in_ch];
    for (int w = 0; w < width; ++w) {
      double acc = bias[o];
      for (int c = 0; c < in_ch; ++c) acc += wrow[c] * mid[static_cast<std::size_t>(c) * width + w];
      out[static_cast<std::size_t>(o) * width + w] = acc;
    }
  }
}

int ConvOutputWidth(int width, int kernel, int stride) {
  const int pad = (kernel - 1) / 2;
  return (width + 2 * pad - kernel) / stride + 1;
}

void Conv(std::span<const double> in, int in_ch, int width,
          std::span<const double> weight, std::span<const double> bias,
          int out_ch, int kernel, int stride, std::span<double> out) {
  const int pad = (kernel - 1) / 2;
  const int out_w = ConvOutputWidth(width, kernel, stride);
  for (int o = 0; o < out_ch; ++o) {
    for (int w = 0; w < out_w; ++w) {
      double acc = bias[o];
      for (int c = 0; c < in_ch; ++c) {
        const double* k = &weight[(static_cast<std::size_t>(o) * in_ch + c) * kernel];
        const double* x = &in[static_cast<std::size_t>(c) * width];
        for (int j = 0; j < kernel; ++j) {
          const int src = w * stride + j - pad;
          if (src >= 0 && src < width) acc += k[j] * x[src];
        }
      }
      out[static_cast<std::size_t>(o) * out_w + w] = acc;
    }
  }
}

int PoolOutputWidth(int width, int factor) { return (width + factor - 1) / factor; }

void MaxPool(std::span<const double> in, int channels, int width, int factor,
             std::span<double> out) {
  const int out_w = PoolOutputWidth(width, factor);
  for (int c = 0; c < channels; ++c) {
    for (int w = 0; w < out_w; ++w) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < factor; ++j) {
        const int src = w * factor + j;
        if (src < width) m = std::max(m, in[static_cast<std::size_t>(c) * width + src]);
      }
      out[static_cast<std::size_t>(c) * out_w + w] = m;
    }
  }
}

void Relu(std::span<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

void Linear(std::span<const double> x, std::span<const double> weight,
            std::span<const double> bias, std::span<double> y) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) {
    double acc = bias[o];
    const double* wrow = &weight[o * in];
    for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void GruStep(std::span<const double> x, std::span<const double> w_ih,
             std::span<const double> w_hh, std::span<const double> b_ih,
             std::span<const double> b_hh, std::span<double> hidden) {
  const std::size_t H = hidden.size();
  std::vector<double> gi(3 * H), gh(3 * H);
  Linear(x, w_ih, b_ih, gi);
  Linear(hidden, w_hh, b_hh, gh);
  for (std::size_t i = 0; i < H; ++i) {
    const double r = Sigmoid(gi[i] + gh[i]);
    const double z = Sigmoid(gi[H + i] + gh[H + i]);
    const double n = std::tanh(gi[2 * H + i] + r * gh[2 * H + i]);
    hidden[i] = (1.0 - z) * n + z * hidden[i];
  }
}

}  // namespace aenr::layers
