#include "specnet/layers.hpp"

#include <limits>
#include <string>

namespace specnet {

template <typename T>
ConvLayer<T>::ConvLayer(std::size_t filters, std::size_t kernel_size, std::size_t in_channels,
                        std::size_t stride_, std::size_t zero_pad_)
    : kernel(Shape{filters, kernel_size, kernel_size, in_channels}),
      bias(Shape{filters}),
      stride(stride_),
      zero_pad(zero_pad_) {
  if (stride == 0) throw DimensionError("convolution stride must be >= 1");
}

template <typename T>
kernels::ConvGeometry ConvLayer<T>::geometry(const Shape& input) const {
  if (input.rank() != 3) {
    throw DimensionError("convolution expects (H, W, C) input, got " + input.to_string());
  }
  if (input[2] != in_channels()) {
    throw DimensionError("convolution channel mismatch: input " + input.to_string() +
                         " vs kernel " + kernel.shape().to_string());
  }
  const std::size_t k = kernel_size();
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const std::size_t padded = input[axis] + 2 * zero_pad;
    if (padded < k || (padded - k) % stride != 0) {
      throw DimensionError("convolution output extent is not integral for input " +
                           input.to_string() + ", kernel " + std::to_string(k) + ", stride " +
                           std::to_string(stride) + ", pad " + std::to_string(zero_pad));
    }
  }
  return kernels::ConvGeometry{input[0], input[1], input[2], filters(), k, stride, zero_pad};
}

template <typename T>
Shape ConvLayer<T>::output_shape(const Shape& input) const {
  const auto g = geometry(input);
  return Shape{g.out_height(), g.out_width(), g.filters};
}

template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& layer, const Tensor<T>& input) {
  const auto g = layer.geometry(input.shape());
  Tensor<T> out(Shape{g.out_height(), g.out_width(), g.filters});
  kernels::conv2d_forward<T>(g, input.data(), layer.kernel.data(), layer.bias.data(), out.data());
  return out;
}

template <typename T>
void conv_backward_accumulate(const ConvLayer<T>& layer, const Tensor<T>& input,
                              const Tensor<T>& grad_output, Tensor<T>* grad_input,
                              Tensor<T>& grad_kernel, Tensor<T>& grad_bias) {
  const auto g = layer.geometry(input.shape());
  const Shape expected{g.out_height(), g.out_width(), g.filters};
  if (grad_output.shape() != expected) {
    throw DimensionError("conv_backward: grad_output " + grad_output.shape().to_string() +
                         " does not match forward output " + expected.to_string());
  }
  if (grad_kernel.shape() != layer.kernel.shape() || grad_bias.shape() != layer.bias.shape()) {
    throw DimensionError("conv_backward: gradient accumulators do not mirror the parameters");
  }
  kernels::conv2d_backward_params<T>(g, input.data(), grad_output.data(), grad_kernel.data(),
                                     grad_bias.data());
  if (grad_input != nullptr) {
    if (grad_input->shape() != input.shape()) *grad_input = Tensor<T>(input.shape());
    kernels::conv2d_backward_input<T>(g, layer.kernel.data(), grad_output.data(), grad_input->data());
  }
}

template <typename T>
ConvGradients<T> conv_backward(const ConvLayer<T>& layer, const Tensor<T>& input,
                               const Tensor<T>& grad_output) {
  ConvGradients<T> grads{Tensor<T>(input.shape()), Tensor<T>(layer.kernel.shape()),
                         Tensor<T>(layer.bias.shape())};
  conv_backward_accumulate(layer, input, grad_output, &grads.input, grads.kernel, grads.bias);
  return grads;
}

Shape MaxPoolLayer::output_shape(const Shape& input) const {
  if (input.rank() != 3) throw DimensionError("max-pooling expects (H, W, C), got " + input.to_string());
  if (input[0] < window || input[1] < window) {
    throw DimensionError("max-pooling needs spatial extent >= " + std::to_string(window) + ", got " +
                         input.to_string());
  }
  return Shape{(input[0] - window) / stride + 1, (input[1] - window) / stride + 1, input[2]};
}

template <typename T>
Tensor<T> maxpool_forward(const MaxPoolLayer& layer, const Tensor<T>& input, PoolRecord& record) {
  const Shape out_shape = layer.output_shape(input.shape());
  if (input.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("max-pooling input too large for 32-bit argmax indices");
  }
  const std::size_t w = input.shape()[1];
  const std::size_t c = input.shape()[2];
  const std::size_t oh = out_shape[0];
  const std::size_t ow = out_shape[1];
  Tensor<T> out(out_shape);
  record.input_shape = input.shape();
  record.argmax.assign(out.size(), 0);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((oy * layer.stride) * w + ox * layer.stride) * c + ch;
        T best_value = input[best];
        for (std::size_t dy = 0; dy < layer.window; ++dy) {
          for (std::size_t dx = 0; dx < layer.window; ++dx) {
            const std::size_t idx = ((oy * layer.stride + dy) * w + ox * layer.stride + dx) * c + ch;
            if (input[idx] > best_value) {
              best_value = input[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (oy * ow + ox) * c + ch;
        out[o] = best_value;
        record.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> maxpool_backward(const PoolRecord& record, const Tensor<T>& grad_output) {
  if (!record.valid()) throw StateError("maxpool_backward called before any forward pass");
  if (grad_output.size() != record.argmax.size()) {
    throw DimensionError("maxpool_backward: grad_output " + grad_output.shape().to_string() +
                         " does not match the recorded forward output");
  }
  Tensor<T> grad_input(record.input_shape);
  for (std::size_t o = 0; o < record.argmax.size(); ++o) grad_input[record.argmax[o]] += grad_output[o];
  return grad_input;
}

template <typename T>
DenseLayer<T>::DenseLayer(std::size_t in_units, std::size_t out_units)
    : weights(Shape{out_units, in_units}), bias(Shape{out_units}) {}

template <typename T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& x) {
  if (x.size() != layer.in_units()) {
    throw DimensionError("dense layer expects " + std::to_string(layer.in_units()) + " inputs, got " +
                         x.shape().to_string());
  }
  Tensor<T> y(Shape{layer.out_units()});
  kernels::matvec<T>(layer.out_units(), layer.in_units(), layer.weights.data(), x.data(), y.data());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += layer.bias[i];
  return y;
}

template <typename T>
void dense_backward_accumulate(const DenseLayer<T>& layer, const Tensor<T>& x,
                               const Tensor<T>& grad_output, Tensor<T>* grad_input,
                               Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  if (x.size() != layer.in_units() || grad_output.size() != layer.out_units()) {
    throw DimensionError("dense_backward: input " + x.shape().to_string() + " / grad " +
                         grad_output.shape().to_string() + " do not fit weights " +
                         layer.weights.shape().to_string());
  }
  if (grad_weights.shape() != layer.weights.shape() || grad_bias.shape() != layer.bias.shape()) {
    throw DimensionError("dense_backward: gradient accumulators do not mirror the parameters");
  }
  kernels::outer_accumulate<T>(layer.out_units(), layer.in_units(), grad_output.data(), x.data(),
                               grad_weights.data());
  for (std::size_t i = 0; i < grad_bias.size(); ++i) grad_bias[i] += grad_output[i];
  if (grad_input != nullptr) {
    if (grad_input->shape() != x.shape()) *grad_input = Tensor<T>(x.shape());
    kernels::matvec_transposed<T>(layer.out_units(), layer.in_units(), layer.weights.data(),
                                  grad_output.data(), grad_input->data());
  }
}

template <typename T>
DenseGradients<T> dense_backward(const DenseLayer<T>& layer, const Tensor<T>& x,
                                 const Tensor<T>& grad_output) {
  DenseGradients<T> grads{Tensor<T>(x.shape()), Tensor<T>(layer.weights.shape()),
                          Tensor<T>(layer.bias.shape())};
  dense_backward_accumulate(layer, x, grad_output, &grads.input, grads.weights, grads.bias);
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output) {
  if (input.shape() != grad_output.shape()) {
    throw DimensionError("relu_backward: shape mismatch " + input.shape().to_string() + " vs " +
                         grad_output.shape().to_string());
  }
  Tensor<T> grad = grad_output;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(input[i] > T{0})) grad[i] = T{0};
  }
  return grad;
}

DropoutLayer::DropoutLayer(double rate_) : rate(rate_) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

template <typename T>
Tensor<T> dropout_forward(const DropoutLayer& layer, const Tensor<T>& input, Mode mode, Rng& rng,
                          DropoutMask& mask) {
  if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(layer.rate));
  }
  mask.keep.clear();
  mask.scale = 1.0;
  if (mode == Mode::infer || layer.rate == 0.0) return input;

  mask.scale = 1.0 / (1.0 - layer.rate);
  mask.keep.resize(input.size());
  std::bernoulli_distribution keep(1.0 - layer.rate);
  const T scale = static_cast<T>(mask.scale);
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    mask.keep[i] = keep(rng) ? 1 : 0;
    out[i] = mask.keep[i] ? input[i] * scale : T{0};
  }
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutMask& mask, const Tensor<T>& grad_output) {
  if (mask.keep.empty()) return grad_output;
  if (mask.keep.size() != grad_output.size()) {
    throw DimensionError("dropout_backward: mask length does not match grad_output " +
                         grad_output.shape().to_string());
  }
  const T scale = static_cast<T>(mask.scale);
  Tensor<T> grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = mask.keep[i] ? grad_output[i] * scale : T{0};
  return grad;
}

#define SPECNET_LAYERS_INSTANTIATE(T)                                                              \
  template struct ConvLayer<T>;                                                                    \
  template struct DenseLayer<T>;                                                                   \
  template Tensor<T> conv_forward<T>(const ConvLayer<T>&, const Tensor<T>&);                       \
  template ConvGradients<T> conv_backward<T>(const ConvLayer<T>&, const Tensor<T>&,                \
                                             const Tensor<T>&);                                    \
  template void conv_backward_accumulate<T>(const ConvLayer<T>&, const Tensor<T>&,                 \
                                            const Tensor<T>&, Tensor<T>*, Tensor<T>&, Tensor<T>&); \
  template Tensor<T> maxpool_forward<T>(const MaxPoolLayer&, const Tensor<T>&, PoolRecord&);       \
  template Tensor<T> maxpool_backward<T>(const PoolRecord&, const Tensor<T>&);                     \
  template Tensor<T> dense_forward<T>(const DenseLayer<T>&, const Tensor<T>&);                     \
  template DenseGradients<T> dense_backward<T>(const DenseLayer<T>&, const Tensor<T>&,             \
                                               const Tensor<T>&);                                  \
  template void dense_backward_accumulate<T>(const DenseLayer<T>&, const Tensor<T>&,               \
                                             const Tensor<T>&, Tensor<T>*, Tensor<T>&, Tensor<T>&);\
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                                            \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> dropout_forward<T>(const DropoutLayer&, const Tensor<T>&, Mode, Rng&,         \
                                        DropoutMask&);                                             \
  template Tensor<T> dropout_backward<T>(const DropoutMask&, const Tensor<T>&);

SPECNET_LAYERS_INSTANTIATE(float)
SPECNET_LAYERS_INSTANTIATE(double)

}  // namespace specnet
