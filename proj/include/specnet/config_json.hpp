#pragma once

// JSON (de)serialization of configuration structs. Readers reject unknown
// keys and name the offending key in the ConfigError.

#include <string>

#include "json.hpp"
#include "specnet/network.hpp"

namespace specnet {

nlohmann::json to_json(const NetworkConfig& config);

// Missing keys keep the values already in `base`.
NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig base = {});

namespace detail {

// Throws ConfigError if `j` has a key outside `allowed`; `where` prefixes
// the message (e.g. "network").
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         const std::string& where);

template <typename V>
void read_key(const nlohmann::json& j, const char* key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail
}  // namespace specnet
