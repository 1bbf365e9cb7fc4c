#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "specnet/kernels.hpp"
#include "specnet/random.hpp"
#include "specnet/tensor.hpp"

namespace specnet {

enum class Mode { train, infer };

// 2-D cross-correlation over (H, W, C) activations. The kernel is stored as
// (filters, k, k, in_channels).
template <typename T>
struct ConvLayer {
  Tensor<T> kernel;
  Tensor<T> bias;
  std::size_t stride = 1;
  std::size_t zero_pad = 1;

  ConvLayer() = default;
  // Zero-initialized parameters.
  ConvLayer(std::size_t filters, std::size_t kernel_size, std::size_t in_channels,
            std::size_t stride = 1, std::size_t zero_pad = 1);

  std::size_t filters() const { return kernel.shape()[0]; }
  std::size_t kernel_size() const { return kernel.shape()[1]; }
  std::size_t in_channels() const { return kernel.shape()[3]; }

  // Throws DimensionError on channel mismatch or a non-integral output extent.
  kernels::ConvGeometry geometry(const Shape& input) const;
  Shape output_shape(const Shape& input) const;
};

template <typename T>
struct ConvGradients {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& layer, const Tensor<T>& input);

template <typename T>
ConvGradients<T> conv_backward(const ConvLayer<T>& layer, const Tensor<T>& input,
                               const Tensor<T>& grad_output);

// Adds the kernel/bias gradients into the given accumulators and, when
// grad_input is non-null, overwrites it with the input gradient.
template <typename T>
void conv_backward_accumulate(const ConvLayer<T>& layer, const Tensor<T>& input,
                              const Tensor<T>& grad_output, Tensor<T>* grad_input,
                              Tensor<T>& grad_kernel, Tensor<T>& grad_bias);

struct MaxPoolLayer {
  std::size_t window = 2;
  std::size_t stride = 2;

  // floor((extent - window) / stride) + 1 per spatial axis; a trailing
  // row/column that does not fill a window is discarded.
  Shape output_shape(const Shape& input) const;
};

// Winning flat input index of every output cell, filled by a forward pass.
struct PoolRecord {
  Shape input_shape;
  std::vector<std::uint32_t> argmax;

  bool valid() const noexcept { return !input_shape.empty(); }
};

// Ties go to the first position in row-major window order.
template <typename T>
Tensor<T> maxpool_forward(const MaxPoolLayer& layer, const Tensor<T>& input, PoolRecord& record);

template <typename T>
Tensor<T> maxpool_backward(const PoolRecord& record, const Tensor<T>& grad_output);

// Affine map y = W x + b with W stored (out_units, in_units).
template <typename T>
struct DenseLayer {
  Tensor<T> weights;
  Tensor<T> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_units, std::size_t out_units);

  std::size_t in_units() const { return weights.shape()[1]; }
  std::size_t out_units() const { return weights.shape()[0]; }
};

template <typename T>
struct DenseGradients {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& x);

template <typename T>
DenseGradients<T> dense_backward(const DenseLayer<T>& layer, const Tensor<T>& x,
                                 const Tensor<T>& grad_output);

template <typename T>
void dense_backward_accumulate(const DenseLayer<T>& layer, const Tensor<T>& x,
                               const Tensor<T>& grad_output, Tensor<T>* grad_input,
                               Tensor<T>& grad_weights, Tensor<T>& grad_bias);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

// Subgradient 0 at input == 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output);

// Inverted dropout: kept units are scaled by 1/(1-rate) at train time so that
// inference is the identity.
struct DropoutLayer {
  double rate = 0.0;

  DropoutLayer() = default;
  explicit DropoutLayer(double rate);
};

struct DropoutMask {
  std::vector<std::uint8_t> keep;  // empty means identity (infer mode or rate 0)
  double scale = 1.0;
};

template <typename T>
Tensor<T> dropout_forward(const DropoutLayer& layer, const Tensor<T>& input, Mode mode, Rng& rng,
                          DropoutMask& mask);

template <typename T>
Tensor<T> dropout_backward(const DropoutMask& mask, const Tensor<T>& grad_output);

}  // namespace specnet
