#ifndef AENR_LAYERS_H_
#define AENR_LAYERS_H_

#include <span>
#include <vector>

// Inference kernels for the post-filter graph. Activations are channel-major
// (channels x width) along the frequency axis; time is handled by the caller.
namespace aenr::layers {

// Depthwise (kernel k, no bias) followed by point-wise (out x in, bias),
// "same" zero padding, stride 1.
void SeparableConv(std::span<const double> in, int in_ch, int width,
                   std::span<const double> depthwise, int kernel,
                   std::span<const double> pointwise, std::span<const double> bias,
                   int out_ch, std::span<double> out);

int ConvOutputWidth(int width, int kernel, int stride);

// Dense 1-D convolution, weight out x in x kernel, padding (kernel - 1) / 2.
void Conv(std::span<const double> in, int in_ch, int width,
          std::span<const double> weight, std::span<const double> bias,
          int out_ch, int kernel, int stride, std::span<double> out);

int PoolOutputWidth(int width, int factor);
void MaxPool(std::span<const double> in, int channels, int width, int factor,
             std::span<double> out);

void Relu(std::span<double> x);

// y = W x + b, W is out x in.
void Linear(std::span<const double> x, std::span<const double> weight,
            std::span<const double> bias, std::span<double> y);

// One GRU step (PyTorch gate order r, z, n). w_ih: 3H x I, w_hh: 3H x H.
// `hidden` is updated in place.
void GruStep(std::span<const double> x, std::span<const double> w_ih,
             std::span<const double> w_hh, std::span<const double> b_ih,
             std::span<const double> b_hh, std::span<double> hidden);

double Sigmoid(double x);

}  // namespace aenr::layers

#endif  // AENR_LAYERS_H_
