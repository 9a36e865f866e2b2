#pragma once

#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace lmo {

/// Config rejected by the schema; `path()` is the dotted location of the
/// offending value ("solver.omga", "sections.heights[2]").
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Validator for the JSON Schema keywords the experiment schema uses:
/// type, properties, required, additionalProperties (false), enum, items,
/// minItems, maxItems, minimum, maximum, exclusiveMinimum,
/// exclusiveMaximum and local "$ref" into "$defs".
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

  void validate(const nlohmann::json& value) const { check(root_, value, ""); }

 private:
  static std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

  const nlohmann::json& resolve(const nlohmann::json& s) const {
    if (!s.contains("$ref")) return s;
    const std::string ref = s["$ref"].get<std::string>();
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw std::logic_error("unsupported $ref " + ref);
    return resolve(root_.at("$defs").at(ref.substr(prefix.size())));
  }

  static bool type_matches(const std::string& type, const nlohmann::json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (type == "number") return v.is_number();
    throw std::logic_error("unsupported schema type " + type);
  }

  void check(const nlohmann::json& schema_in, const nlohmann::json& v, const std::string& path) const {
    const nlohmann::json& s = resolve(schema_in);
    if (s.contains("type")) {
      const std::string t = s["type"].get<std::string>();
      if (!type_matches(t, v)) throw SchemaError(path, "expected " + t + ", got " + v.type_name());
    }
    if (s.contains("enum")) {
      bool ok = false;
      for (const auto& e : s["enum"]) ok = ok || e == v;
      if (!ok) throw SchemaError(path, "value " + v.dump() + " not in " + s["enum"].dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) throw SchemaError(path, "must be >= " + s["minimum"].dump());
      if (s.contains("maximum") && x > s["maximum"].get<double>()) throw SchemaError(path, "must be <= " + s["maximum"].dump());
      if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>())) {
        throw SchemaError(path, "must be > " + s["exclusiveMinimum"].dump());
      }
      if (s.contains("exclusiveMaximum") && !(x < s["exclusiveMaximum"].get<double>())) {
        throw SchemaError(path, "must be < " + s["exclusiveMaximum"].dump());
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
        throw SchemaError(path, "needs at least " + s["minItems"].dump() + " items");
      }
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
        throw SchemaError(path, "allows at most " + s["maxItems"].dump() + " items");
      }
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], path + "[" + std::to_string(i) + "]");
      }
    }
    if (v.is_object()) {
      const nlohmann::json empty = nlohmann::json::object();
      const nlohmann::json& props = s.contains("properties") ? s["properties"] : empty;
      if (s.contains("required")) {
        for (const auto& r : s["required"]) {
          const std::string key = r.get<std::string>();
          if (!v.contains(key)) throw SchemaError(join(path, key), "required key is missing");
        }
      }
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (props.contains(it.key())) {
          check(props[it.key()], it.value(), join(path, it.key()));
        } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
          throw SchemaError(join(path, it.key()), "unknown key");
        }
      }
    }
  }

  nlohmann::json root_;
};

}  // namespace lmo
