#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "vitreg/error.hpp"

namespace vitreg::detail {

using nlohmann::json;

// Reads known keys of one JSON object and rejects anything left over.
class StrictObject {
 public:
  StrictObject(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    require(j.is_object(), ErrorKind::kConfig, "'" + section_ + "' must be a JSON object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const json& v = *it;
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    } else {
      ok = true;
    }
    require(ok, ErrorKind::kConfig, "'" + path(key) + "' has the wrong type");
    out = v.get<T>();
  }

  const json* sub(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string path(const std::string& key) const { return section_.empty() ? key : section_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      require(seen_.count(key) != 0, ErrorKind::kConfig, "unknown configuration key '" + path(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace vitreg::detail
