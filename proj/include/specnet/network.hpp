#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "specnet/layers.hpp"
#include "specnet/random.hpp"
#include "specnet/tensor.hpp"

namespace specnet {

struct ConvBlock {
  std::size_t filters = 0;
  std::size_t layers = 0;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

// Declarative layer stack: every conv block is a run of (conv, relu) pairs
// followed by max-pool and dropout; the dense layers follow a flatten, each
// but the last with relu + dropout, and the last feeds the softmax.
struct NetworkConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 8;
  std::vector<ConvBlock> conv_blocks;
  std::size_t kernel_size = 3;
  std::size_t stride = 1;
  std::size_t zero_pad = 1;
  std::vector<std::size_t> fc_sizes;
  std::size_t class_count = 4;
  double dropout_post_pool = 0.25;
  double dropout_post_fc = 0.5;
  // Literal readings of the architecture text, both off by default: ReLU on
  // the logits, and dropout after the classifier layer.
  bool relu_on_output = false;
  bool dropout_on_output = false;

  Shape input_shape() const { return Shape{height, width, channels}; }

  // Halved-VGG16 stack: 32/64/128/256 filters in 2/2/3/3 layers, dense
  // 1024-1024-4.
  static NetworkConfig paper(std::size_t height, std::size_t width, std::size_t channels);
  // 8x8x2 input, blocks (4,1),(8,1), dense 16-4, no dropout.
  static NetworkConfig tiny();
  // Desk-scale model: blocks (8,2),(16,2), dense 64-4.
  static NetworkConfig desk(std::size_t height, std::size_t width, std::size_t channels);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class LayerKind { conv, relu, maxpool, dropout, flatten, dense };

std::string_view layer_kind_name(LayerKind kind) noexcept;

struct LayerPlan {
  LayerKind kind;
  Shape input;
  Shape output;
  double dropout_rate = 0.0;
};

// Shape propagation without allocating parameters.
struct NetworkPlan {
  std::vector<LayerPlan> layers;
  std::size_t weighted_layers = 0;
  std::size_t flatten_width = 0;
  std::size_t weight_count = 0;  // kernels and dense matrices
  std::size_t bias_count = 0;

  std::size_t parameter_count() const { return weight_count + bias_count; }
};

// Throws ConfigError naming the offending key or stage (e.g. a spatial
// extent that collapses below the pooling window).
NetworkPlan plan_network(const NetworkConfig& config);

struct ReluLayer {};
struct FlattenLayer {};

template <typename T>
using Layer = std::variant<ConvLayer<T>, ReluLayer, MaxPoolLayer, DropoutLayer, FlattenLayer,
                           DenseLayer<T>>;

template <typename T>
class Network {
 public:
  // Zero-initialized parameters; use build() for Xavier initialization.
  explicit Network(NetworkConfig config);

  const NetworkConfig& config() const noexcept { return config_; }
  const NetworkPlan& plan() const noexcept { return plan_; }
  const std::vector<Layer<T>>& layers() const noexcept { return layers_; }
  std::vector<Layer<T>>& layers() noexcept { return layers_; }

  // Trainable tensors in layer order, (weights, bias) per weighted layer.
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::size_t parameter_count() const noexcept { return plan_.parameter_count(); }
  std::size_t weighted_layer_count() const noexcept { return plan_.weighted_layers; }

  // Bumped by every parameter update; caches from older generations are stale.
  std::uint64_t generation() const noexcept { return generation_; }
  void touch() noexcept { ++generation_; }

 private:
  NetworkConfig config_;
  NetworkPlan plan_;
  std::vector<Layer<T>> layers_;
  std::uint64_t generation_ = 0;
};

struct InitSpec {
  std::size_t fan_in = 1;
  std::size_t fan_out = 1;

  double standard_deviation() const;
};

// i.i.d. normal(0, 2 / (fan_in + fan_out)) draws.
template <typename T>
Tensor<T> xavier_init(const InitSpec& spec, const Shape& shape, Rng& rng);

// Xavier-initialized weights (dense fans: in/out units; conv fans: k*k*C_in
// and k*k*F), zero biases. Deterministic in the rng state.
template <typename T>
Network<T> build(const NetworkConfig& config, Rng& rng);

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> inputs;  // input of every layer
  std::vector<PoolRecord> pools;
  std::vector<DropoutMask> masks;
  Tensor<T> probs;
  std::uint64_t generation = 0;

  bool empty() const noexcept { return inputs.empty(); }
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;
  Tensor<T> probs;
  ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& image, Mode mode, Rng& rng);

// Inference-mode forward; dropout is bypassed so no randomness is consumed.
template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& image);

// Max-subtracted softmax.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

inline constexpr double kProbabilityFloor = 1e-12;

// -log(max(probs[label], 1e-12)).
template <typename T>
double cross_entropy(const Tensor<T>& probs, std::size_t label);

// Per-parameter gradient sums (mirroring Network::parameters()) over the
// examples seen since the last reset, plus the most recent example's error
// term at the output of every layer.
template <typename T>
struct BackpropState {
  std::vector<Tensor<T>> gradients;
  std::vector<Tensor<T>> errors;
  std::size_t examples = 0;

  BackpropState() = default;
  explicit BackpropState(const Network<T>& net);
  void reset();
};

// Accumulates the gradient of cross_entropy(softmax(logits), label) for the
// cached example. The output error is probs - onehot(label).
template <typename T>
void backward(const Network<T>& net, const ForwardCache<T>& cache, std::size_t label,
              BackpropState<T>& state);

// theta <- theta - lr * (1/m) * sum, then resets the state.
template <typename T>
void sgd_step(Network<T>& net, BackpropState<T>& state, double learning_rate);

template <typename T>
std::vector<Tensor<T>> snapshot_parameters(const Network<T>& net);

template <typename T>
void restore_parameters(Network<T>& net, const std::vector<Tensor<T>>& snapshot);

// Checkpoint container ("SPNW"). The config is stored as canonical JSON.
template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Network<T>& net);

template <typename T>
Network<T> deserialize_checkpoint(std::span<const std::uint8_t> bytes);

template <typename T>
void write_checkpoint(const std::filesystem::path& path, const Network<T>& net);

template <typename T>
Network<T> read_checkpoint(const std::filesystem::path& path);

// Configuration recorded in a checkpoint without materializing the tensors.
NetworkConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace specnet
