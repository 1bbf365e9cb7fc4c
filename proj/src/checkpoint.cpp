#include <string>

#include "byte_io.hpp"
#include "specnet/config_json.hpp"
#include "specnet/network.hpp"

namespace specnet {

namespace detail {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (std::string_view a : allowed) known = known || it.key() == a;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

nlohmann::json to_json(const NetworkConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.conv_blocks) blocks.push_back({b.filters, b.layers});
  return {
      {"height", c.height},
      {"width", c.width},
      {"channels", c.channels},
      {"conv_blocks", blocks},
      {"kernel_size", c.kernel_size},
      {"stride", c.stride},
      {"zero_pad", c.zero_pad},
      {"fc_sizes", c.fc_sizes},
      {"class_count", c.class_count},
      {"dropout_post_pool", c.dropout_post_pool},
      {"dropout_post_fc", c.dropout_post_fc},
      {"relu_on_output", c.relu_on_output},
      {"dropout_on_output", c.dropout_on_output},
  };
}

NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig c) {
  const std::string where = "network";
  detail::reject_unknown_keys(j,
                              {"height", "width", "channels", "conv_blocks", "kernel_size", "stride",
                               "zero_pad", "fc_sizes", "class_count", "dropout_post_pool",
                               "dropout_post_fc", "relu_on_output", "dropout_on_output"},
                              where);
  detail::read_key(j, "height", c.height, where);
  detail::read_key(j, "width", c.width, where);
  detail::read_key(j, "channels", c.channels, where);
  if (j.contains("conv_blocks")) {
    std::vector<std::array<std::size_t, 2>> blocks;
    detail::read_key(j, "conv_blocks", blocks, where);
    c.conv_blocks.clear();
    for (const auto& b : blocks) c.conv_blocks.push_back({b[0], b[1]});
  }
  detail::read_key(j, "kernel_size", c.kernel_size, where);
  detail::read_key(j, "stride", c.stride, where);
  detail::read_key(j, "zero_pad", c.zero_pad, where);
  detail::read_key(j, "fc_sizes", c.fc_sizes, where);
  detail::read_key(j, "class_count", c.class_count, where);
  detail::read_key(j, "dropout_post_pool", c.dropout_post_pool, where);
  detail::read_key(j, "dropout_post_fc", c.dropout_post_fc, where);
  detail::read_key(j, "relu_on_output", c.relu_on_output, where);
  detail::read_key(j, "dropout_on_output", c.dropout_on_output, where);
  return c;
}

namespace {

constexpr std::string_view kMagic = "SPNW";
constexpr std::uint16_t kVersion = 1;

template <typename T>
constexpr std::string_view precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

struct Header {
  NetworkConfig config;
  std::string precision;
};

Header read_header(detail::ByteReader& r) {
  if (r.raw(kMagic.size()) != kMagic) throw BadMagicError(r.context() + ": not a checkpoint (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) {
    throw FormatError(r.context() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = r.get<std::uint32_t>();
  const std::string_view text = r.raw(length);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(r.context() + ": malformed config block: " + e.what());
  }
  if (!j.is_object() || !j.contains("network") || !j.contains("precision")) {
    throw FormatError(r.context() + ": config block lacks 'network' or 'precision'");
  }
  return {network_config_from_json(j.at("network")), j.at("precision").get<std::string>()};
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Network<T>& net) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.put<std::uint16_t>(kVersion);
  const nlohmann::json meta = {{"network", to_json(net.config())},
                               {"precision", std::string(precision_name<T>())}};
  const std::string text = meta.dump();  // object keys are sorted: canonical
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  for (const Tensor<T>* p : net.parameters()) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(p->rank()));
    for (std::size_t e : p->shape().extents()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    w.put_all<T>(p->data());
  }
  return std::move(w.bytes());
}

template <typename T>
Network<T> deserialize_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context) {
  detail::ByteReader r(bytes, context);
  Header h = read_header(r);
  if (h.precision != precision_name<T>()) {
    throw FormatError(context + ": checkpoint precision is " + h.precision + ", expected " +
                      std::string(precision_name<T>()));
  }
  Network<T> net(h.config);
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto rank = r.get<std::uint8_t>();
    std::vector<std::size_t> extents(rank);
    for (auto& e : extents) e = r.get<std::uint32_t>();
    if (rank == 0 || Shape(extents) != params[i]->shape()) {
      throw ExtentMismatchError(context + ": parameter tensor " + std::to_string(i) +
                                " does not match the recorded configuration");
    }
    r.get_all<T>(params[i]->data());
  }
  if (r.remaining() != 0) {
    throw ExtentMismatchError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return net;
}

template <typename T>
Network<T> deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  return deserialize_checkpoint<T>(bytes, "checkpoint");
}

template <typename T>
void write_checkpoint(const std::filesystem::path& path, const Network<T>& net) {
  const auto bytes = serialize_checkpoint(net);
  detail::write_file(path, bytes);
}

template <typename T>
Network<T> read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return deserialize_checkpoint<T>(bytes, path.string());
}

NetworkConfig read_checkpoint_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes, path.string());
  return read_header(r).config;
}

#define SPECNET_CHECKPOINT_INSTANTIATE(T)                                                  \
  template std::vector<std::uint8_t> serialize_checkpoint<T>(const Network<T>&);           \
  template Network<T> deserialize_checkpoint<T>(std::span<const std::uint8_t>);            \
  template void write_checkpoint<T>(const std::filesystem::path&, const Network<T>&);      \
  template Network<T> read_checkpoint<T>(const std::filesystem::path&);

SPECNET_CHECKPOINT_INSTANTIATE(float)
SPECNET_CHECKPOINT_INSTANTIATE(double)

}  // namespace specnet
