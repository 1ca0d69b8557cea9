#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "fsd/harness/scenario.hpp"

namespace fsd::harness {

namespace detail {

// Assigns one TOML value to its bound field; false on a type mismatch.
inline bool assign(const ParamRef& ref, const toml::node& node) {
  return std::visit(
      [&](auto* p) -> bool {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          const auto v = node.value_exact<bool>();
          if (!v) return false;
          *p = *v;
        } else if constexpr (std::is_same_v<T, std::string>) {
          const auto v = node.value_exact<std::string>();
          if (!v) return false;
          *p = *v;
        } else if constexpr (std::is_same_v<T, RunMode>) {
          const auto v = node.value_exact<std::string>();
          if (!v || !parse_mode(*v, *p)) return false;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!node.is_number()) return false;
          *p = *node.value<double>();
        } else {
          const auto v = node.value_exact<std::int64_t>();
          if (!v || *v < 0) return false;
          *p = static_cast<T>(*v);
        }
        return true;
      },
      ref);
}

}  // namespace detail

// Applies a parsed TOML document on top of `base`. Unknown sections or keys,
// wrong types and out-of-range values are collected into one ValidationError.
inline Scenario apply_config(const toml::table& doc, Scenario base = {}) {
  std::vector<std::string> bad;
  for (auto&& [section_key, section_node] : doc) {
    const std::string section(section_key.str());
    const toml::table* tbl = section_node.as_table();
    if (tbl == nullptr) {
      bad.push_back(section);
      continue;
    }
    for (auto&& [key, value] : *tbl) {
      const ParamDef* def = find_param(section, key.str());
      const std::string name = section + "." + std::string(key.str());
      if (def == nullptr || !detail::assign(def->bind(base), value)) bad.push_back(name);
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad), "unknown key or wrong type");
  validate(base);
  return base;
}

inline Scenario parse_config(std::string_view text) {
  try {
    return apply_config(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw ValidationError({}, std::string(e.description()));
  }
}

inline Scenario load_config(const std::filesystem::path& path) {
  try {
    return apply_config(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    throw ValidationError({}, path.string() + ": " + std::string(e.description()));
  }
}

// Writes every key with its default and documented range as a TOML comment table.
inline void write_key_reference(std::ostream& os) {
  Scenario defaults;
  std::string_view current;
  for (const ParamDef& def : parameter_table()) {
    if (def.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << def.section << "]\n";
      current = def.section;
    }
    os << def.key << " = " << format_value(def.bind(defaults)) << "  # " << def.doc;
    if (def.lo < def.hi) os << "; range [" << def.lo << ", " << def.hi << ']';
    os << '\n';
  }
}

}  // namespace fsd::harness
