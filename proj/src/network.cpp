#include "specnet/network.hpp"

#include <cmath>
#include <string>

namespace specnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

NetworkConfig NetworkConfig::paper(std::size_t height, std::size_t width, std::size_t channels) {
  NetworkConfig c;
  c.height = height;
  c.width = width;
  c.channels = channels;
  c.conv_blocks = {{32, 2}, {64, 2}, {128, 3}, {256, 3}};
  c.fc_sizes = {1024, 1024, 4};
  c.class_count = 4;
  return c;
}

NetworkConfig NetworkConfig::tiny() {
  NetworkConfig c;
  c.height = 8;
  c.width = 8;
  c.channels = 2;
  c.conv_blocks = {{4, 1}, {8, 1}};
  c.fc_sizes = {16, 4};
  c.dropout_post_pool = 0.0;
  c.dropout_post_fc = 0.0;
  return c;
}

NetworkConfig NetworkConfig::desk(std::size_t height, std::size_t width, std::size_t channels) {
  NetworkConfig c;
  c.height = height;
  c.width = width;
  c.channels = channels;
  c.conv_blocks = {{8, 2}, {16, 2}};
  c.fc_sizes = {64, 4};
  return c;
}

std::string_view layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "unknown";
}

NetworkPlan plan_network(const NetworkConfig& config) {
  require_config(config.height >= 1 && config.width >= 1 && config.channels >= 1,
                 "network.input: height, width and channels must be >= 1");
  require_config(config.kernel_size >= 1, "network.kernel_size must be >= 1");
  require_config(config.stride >= 1, "network.stride must be >= 1");
  require_config(config.class_count >= 2, "network.class_count must be >= 2");
  require_config(!config.fc_sizes.empty(), "network.fc_sizes must not be empty");
  require_config(config.fc_sizes.back() == config.class_count,
                 "network.fc_sizes: last layer has " + std::to_string(config.fc_sizes.back()) +
                     " units but class_count is " + std::to_string(config.class_count));
  for (std::size_t units : config.fc_sizes) require_config(units >= 1, "network.fc_sizes entries must be >= 1");
  require_config(config.dropout_post_pool >= 0.0 && config.dropout_post_pool < 1.0,
                 "network.dropout_post_pool must lie in [0, 1)");
  require_config(config.dropout_post_fc >= 0.0 && config.dropout_post_fc < 1.0,
                 "network.dropout_post_fc must lie in [0, 1)");

  NetworkPlan plan;
  Shape shape = config.input_shape();
  const std::size_t k = config.kernel_size;
  const MaxPoolLayer pool;

  for (std::size_t b = 0; b < config.conv_blocks.size(); ++b) {
    const ConvBlock& block = config.conv_blocks[b];
    const std::string where = "network.conv_blocks[" + std::to_string(b) + "]";
    require_config(block.filters >= 1 && block.layers >= 1, where + ": filters and layers must be >= 1");
    for (std::size_t l = 0; l < block.layers; ++l) {
      std::size_t out[2];
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const std::size_t padded = shape[axis] + 2 * config.zero_pad;
        require_config(padded >= k && (padded - k) % config.stride == 0,
                       where + " conv " + std::to_string(l) + ": input " + shape.to_string() +
                           " gives a non-integral output extent");
        out[axis] = (padded - k) / config.stride + 1;
      }
      Shape next{out[0], out[1], block.filters};
      plan.layers.push_back({LayerKind::conv, shape, next});
      plan.layers.push_back({LayerKind::relu, next, next});
      plan.weight_count += k * k * shape[2] * block.filters;
      plan.bias_count += block.filters;
      ++plan.weighted_layers;
      shape = next;
    }
    require_config(shape[0] >= pool.window && shape[1] >= pool.window,
                   where + " max-pool: spatial extent " + std::to_string(shape[0]) + "x" +
                       std::to_string(shape[1]) + " collapses below " + std::to_string(pool.window));
    Shape pooled = pool.output_shape(shape);
    plan.layers.push_back({LayerKind::maxpool, shape, pooled});
    plan.layers.push_back({LayerKind::dropout, pooled, pooled, config.dropout_post_pool});
    shape = pooled;
  }

  plan.flatten_width = shape.element_count();
  Shape flat{plan.flatten_width};
  plan.layers.push_back({LayerKind::flatten, shape, flat});
  std::size_t in_units = plan.flatten_width;
  for (std::size_t i = 0; i < config.fc_sizes.size(); ++i) {
    const std::size_t units = config.fc_sizes[i];
    const Shape out{units};
    plan.layers.push_back({LayerKind::dense, Shape{in_units}, out});
    plan.weight_count += in_units * units;
    plan.bias_count += units;
    ++plan.weighted_layers;
    const bool last = i + 1 == config.fc_sizes.size();
    if (!last || config.relu_on_output) plan.layers.push_back({LayerKind::relu, out, out});
    if (!last || config.dropout_on_output) {
      plan.layers.push_back({LayerKind::dropout, out, out, config.dropout_post_fc});
    }
    in_units = units;
  }
  return plan;
}

template <typename T>
Network<T>::Network(NetworkConfig config) : config_(std::move(config)), plan_(plan_network(config_)) {
  layers_.reserve(plan_.layers.size());
  for (const LayerPlan& lp : plan_.layers) {
    switch (lp.kind) {
      case LayerKind::conv:
        layers_.emplace_back(ConvLayer<T>(lp.output[2], config_.kernel_size, lp.input[2], config_.stride,
                                          config_.zero_pad));
        break;
      case LayerKind::relu: layers_.emplace_back(ReluLayer{}); break;
      case LayerKind::maxpool: layers_.emplace_back(MaxPoolLayer{}); break;
      case LayerKind::dropout: layers_.emplace_back(DropoutLayer(lp.dropout_rate)); break;
      case LayerKind::flatten: layers_.emplace_back(FlattenLayer{}); break;
      case LayerKind::dense: layers_.emplace_back(DenseLayer<T>(lp.input[0], lp.output[0])); break;
    }
  }
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (auto& layer : layers_) {
    if (auto* c = std::get_if<ConvLayer<T>>(&layer)) {
      out.push_back(&c->kernel);
      out.push_back(&c->bias);
    } else if (auto* d = std::get_if<DenseLayer<T>>(&layer)) {
      out.push_back(&d->weights);
      out.push_back(&d->bias);
    }
  }
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  std::vector<const Tensor<T>*> out;
  for (auto* p : const_cast<Network<T>*>(this)->parameters()) out.push_back(p);
  return out;
}

double InitSpec::standard_deviation() const {
  if (fan_in < 1 || fan_out < 1) throw ConfigError("xavier_init: fan counts must be >= 1");
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
Tensor<T> xavier_init(const InitSpec& spec, const Shape& shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, spec.standard_deviation());
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(normal(rng));
  return t;
}

template <typename T>
Network<T> build(const NetworkConfig& config, Rng& rng) {
  Network<T> net(config);
  for (auto& layer : net.layers()) {
    if (auto* c = std::get_if<ConvLayer<T>>(&layer)) {
      const std::size_t kk = c->kernel_size() * c->kernel_size();
      c->kernel = xavier_init<T>({kk * c->in_channels(), kk * c->filters()}, c->kernel.shape(), rng);
    } else if (auto* d = std::get_if<DenseLayer<T>>(&layer)) {
      d->weights = xavier_init<T>({d->in_units(), d->out_units()}, d->weights.shape(), rng);
    }
  }
  return net;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.empty()) throw DimensionError("softmax of an empty tensor");
  T max = logits[0];
  for (T v : logits.data()) max = v > max ? v : max;
  Tensor<T> p(logits.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = std::exp(static_cast<double>(logits[i] - max));
    p[i] = static_cast<T>(e);
    sum += e;
  }
  for (auto& v : p.data()) v = static_cast<T>(v / sum);
  return p;
}

template <typename T>
double cross_entropy(const Tensor<T>& probs, std::size_t label) {
  if (label >= probs.size()) {
    throw DimensionError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(probs.size()) + " classes");
  }
  const double p = static_cast<double>(probs[label]);
  return -std::log(p > kProbabilityFloor ? p : kProbabilityFloor);
}

template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& image, Mode mode, Rng& rng) {
  if (image.shape() != net.config().input_shape()) {
    throw DimensionError("network expects input " + net.config().input_shape().to_string() + ", got " +
                         image.shape().to_string());
  }
  const auto& layers = net.layers();
  ForwardResult<T> result;
  ForwardCache<T>& cache = result.cache;
  cache.inputs.reserve(layers.size());
  cache.pools.resize(layers.size());
  cache.masks.resize(layers.size());
  cache.generation = net.generation();

  Tensor<T> a = image;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cache.inputs.push_back(std::move(a));
    const Tensor<T>& in = cache.inputs.back();
    a = std::visit(overloaded{
                       [&](const ConvLayer<T>& l) { return conv_forward(l, in); },
                       [&](const ReluLayer&) { return relu_forward(in); },
                       [&](const MaxPoolLayer& l) { return maxpool_forward(l, in, cache.pools[i]); },
                       [&](const DropoutLayer& l) { return dropout_forward(l, in, mode, rng, cache.masks[i]); },
                       [&](const FlattenLayer&) { return in.reshape(Shape{in.size()}); },
                       [&](const DenseLayer<T>& l) { return dense_forward(l, in); },
                   },
                   layers[i]);
  }
  result.probs = softmax(a);
  cache.probs = result.probs;
  result.logits = std::move(a);
  return result;
}

template <typename T>
ForwardResult<T> forward(const Network<T>& net, const Tensor<T>& image) {
  Rng unused(0);
  return forward(net, image, Mode::infer, unused);
}

template <typename T>
BackpropState<T>::BackpropState(const Network<T>& net) {
  for (const Tensor<T>* p : net.parameters()) gradients.emplace_back(p->shape());
}

template <typename T>
void BackpropState<T>::reset() {
  for (auto& g : gradients) g.fill(T{0});
  errors.clear();
  examples = 0;
}

template <typename T>
void backward(const Network<T>& net, const ForwardCache<T>& cache, std::size_t label,
              BackpropState<T>& state) {
  const auto& layers = net.layers();
  if (cache.empty() || cache.inputs.size() != layers.size()) {
    throw StateError("backward: missing forward cache");
  }
  if (cache.generation != net.generation()) {
    throw StateError("backward: stale forward cache (parameters changed since the forward pass)");
  }
  if (label >= net.config().class_count) {
    throw DimensionError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(net.config().class_count) + " classes");
  }
  const auto params = net.parameters();
  if (state.gradients.size() != params.size()) {
    throw DimensionError("backward: state does not mirror this network's parameters");
  }

  Tensor<T> g = cache.probs;
  g[label] -= T{1};
  state.errors.assign(layers.size(), Tensor<T>());

  std::size_t pi = params.size();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Tensor<T>& in = cache.inputs[i];
    Tensor<T>* grad_in_ptr = nullptr;
    Tensor<T> grad_in;
    if (i > 0) grad_in_ptr = &grad_in;
    state.errors[i] = g;
    std::visit(overloaded{
                   [&](const ConvLayer<T>& l) {
                     pi -= 2;
                     conv_backward_accumulate(l, in, g, grad_in_ptr, state.gradients[pi], state.gradients[pi + 1]);
                   },
                   [&](const ReluLayer&) { grad_in = relu_backward(in, g); },
                   [&](const MaxPoolLayer&) { grad_in = maxpool_backward(cache.pools[i], g); },
                   [&](const DropoutLayer&) { grad_in = dropout_backward(cache.masks[i], g); },
                   [&](const FlattenLayer&) { grad_in = g.reshape(in.shape()); },
                   [&](const DenseLayer<T>& l) {
                     pi -= 2;
                     dense_backward_accumulate(l, in, g, grad_in_ptr, state.gradients[pi], state.gradients[pi + 1]);
                   },
               },
               layers[i]);
    g = std::move(grad_in);
  }
  ++state.examples;
}

template <typename T>
void sgd_step(Network<T>& net, BackpropState<T>& state, double learning_rate) {
  if (state.examples == 0) throw StateError("sgd_step: no examples accumulated (m == 0)");
  auto params = net.parameters();
  if (state.gradients.size() != params.size()) {
    throw DimensionError("sgd_step: state does not mirror this network's parameters");
  }
  const T scale = static_cast<T>(-learning_rate / static_cast<double>(state.examples));
  for (std::size_t i = 0; i < params.size(); ++i) {
    kernels::axpy<T>(scale, state.gradients[i].data(), params[i]->data());
  }
  state.reset();
  net.touch();
}

template <typename T>
std::vector<Tensor<T>> snapshot_parameters(const Network<T>& net) {
  std::vector<Tensor<T>> out;
  for (const Tensor<T>* p : net.parameters()) out.push_back(*p);
  return out;
}

template <typename T>
void restore_parameters(Network<T>& net, const std::vector<Tensor<T>>& snapshot) {
  auto params = net.parameters();
  if (params.size() != snapshot.size()) throw DimensionError("restore_parameters: snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != snapshot[i].shape()) {
      throw DimensionError("restore_parameters: tensor " + std::to_string(i) + " shape mismatch");
    }
    *params[i] = snapshot[i];
  }
  net.touch();
}

#define SPECNET_NETWORK_INSTANTIATE(T)                                                          \
  template class Network<T>;                                                                    \
  template struct BackpropState<T>;                                                             \
  template Tensor<T> xavier_init<T>(const InitSpec&, const Shape&, Rng&);                       \
  template Network<T> build<T>(const NetworkConfig&, Rng&);                                     \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                              \
  template double cross_entropy<T>(const Tensor<T>&, std::size_t);                              \
  template ForwardResult<T> forward<T>(const Network<T>&, const Tensor<T>&, Mode, Rng&);        \
  template ForwardResult<T> forward<T>(const Network<T>&, const Tensor<T>&);                    \
  template void backward<T>(const Network<T>&, const ForwardCache<T>&, std::size_t,             \
                            BackpropState<T>&);                                                 \
  template void sgd_step<T>(Network<T>&, BackpropState<T>&, double);                            \
  template std::vector<Tensor<T>> snapshot_parameters<T>(const Network<T>&);                    \
  template void restore_parameters<T>(Network<T>&, const std::vector<Tensor<T>>&);

SPECNET_NETWORK_INSTANTIATE(float)
SPECNET_NETWORK_INSTANTIATE(double)

}  // namespace specnet
