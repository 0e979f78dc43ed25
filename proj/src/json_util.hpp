/*
 * Copyright 2026 The dapsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Private helpers for reading configuration documents with uniform error messages.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dapsim/error.hpp"

namespace dapsim::detail {

inline nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

inline const nlohmann::json& array_or_empty(const nlohmann::json& obj, const char* key, const char* what) {
  static const nlohmann::json empty = nlohmann::json::array();
  if (!obj.contains(key) || obj[key].is_null()) return empty;
  if (!obj[key].is_array()) throw ValidationError(std::string(what) + ": '" + key + "' must be an array");
  return obj[key];
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
    throw ValidationError(std::string(what) + ": missing string field '" + key + "'");
  }
  return obj[key].get<std::string>();
}

inline double require_number(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number()) {
    throw ValidationError(std::string(what) + ": missing numeric field '" + key + "'");
  }
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": field '" + key + "' is not finite");
  return v;
}

inline double number_or(const nlohmann::json& obj, const char* key, double fallback, const char* what) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return fallback;
  return require_number(obj, key, what);
}

inline std::int64_t require_integer(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number_integer()) {
    throw ValidationError(std::string(what) + ": missing integer field '" + key + "'");
  }
  return obj[key].get<std::int64_t>();
}

inline std::int64_t integer_or(const nlohmann::json& obj, const char* key, std::int64_t fallback,
                               const char* what) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return fallback;
  return require_integer(obj, key, what);
}

}  // namespace dapsim::detail
