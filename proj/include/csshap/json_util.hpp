#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "csshap/error.hpp"

namespace csshap {

using Json = nlohmann::json;

// Throws ConfigurationError naming the first key of obj not in allowed.
inline void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& context) {
  if (!obj.is_object()) throw ConfigurationError(context + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigurationError(context + ": unknown key '" + item.key() + "'");
  }
}

inline Json parse_json(const std::string& text, const std::string& context) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigurationError(context + ": " + e.what());
  }
}

// Typed read; a wrong type becomes a ConfigurationError naming the key.
template <typename T>
void read_key(const Json& obj, const char* key, T& out, const std::string& context) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigurationError(context + ": invalid value for '" + key + "'");
  }
}

}  // namespace csshap
