// Experiment configuration: JSON schema, validation with pointer-accurate
// errors, functional specs, and the report/statistic record types.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbsvar/errors.hpp"
#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/rng.hpp"

namespace fbsvar {

using json = nlohmann::json;

enum class ExperimentKind {
  Covariance,
  Clt,
  Nclt,
  Flln,
  MomentBound,
  OracleAgreement,
  BetaExplosion,
  Interpolation,
};

inline const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"covariance", ExperimentKind::Covariance},
      {"clt", ExperimentKind::Clt},
      {"nclt", ExperimentKind::Nclt},
      {"flln", ExperimentKind::Flln},
      {"moment-bound", ExperimentKind::MomentBound},
      {"oracle-agreement", ExperimentKind::OracleAgreement},
      {"beta-explosion", ExperimentKind::BetaExplosion},
      {"interpolation", ExperimentKind::Interpolation},
  };
  return names;
}

inline std::string kind_name(ExperimentKind k) {
  for (const auto& [name, kind] : kind_names())
    if (kind == k) return name;
  return "?";
}

/// Variation functional: "Pk:<k>", "power:<p>", or an inline expansion object.
struct FunctionalSpec {
  std::string label;
  HermiteExpansion expansion;
};

inline FunctionalSpec parse_functional(const json& j,
                                       const std::string& pointer) {
  FunctionalSpec spec;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const std::string head = s.substr(0, colon);
      int arg = 0;
      try {
        arg = std::stoi(s.substr(colon + 1));
      } catch (...) {
        throw config_error(pointer, "functional argument is not an integer");
      }
      if (head == "Pk") {
        if (arg < 1) throw config_error(pointer, "Pk order must be >= 1");
        spec.label = s;
        spec.expansion.coeffs[arg] = 1.0;
        spec.expansion.rank = arg;
        spec.expansion.truncation = arg;
        const auto rep = assumption_value(spec.expansion);
        spec.expansion.summability_value = rep.value;
        return spec;
      }
      if (head == "power") {
        if (arg < 1) throw config_error(pointer, "power must be >= 1");
        spec.label = s;
        spec.expansion = power_expansion(arg);
        return spec;
      }
    }
    throw config_error(pointer, "expected \"Pk:<k>\" or \"power:<p>\"");
  }
  if (j.is_object()) {
    try {
      spec.expansion = expansion_from_json(j);
    } catch (const std::exception& e) {
      throw config_error(pointer, e.what());
    }
    spec.label = "custom";
    return spec;
  }
  throw config_error(pointer, "functional must be a string or an object");
}

struct OracleCase {
  RealVec hurst;
  std::vector<std::int64_t> extents;
  FunctionalSpec functional;
  int p = 2;
  std::string label;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Clt;
  std::string name;
  std::uint64_t seed = 0;
  std::int64_t replications = 0;
  RealVec hurst;
  std::vector<std::int64_t> shape;
  std::vector<std::vector<std::int64_t>> shape_grid;
  std::optional<FunctionalSpec> functional;
  int power = 0;
  std::vector<RealVec> t_points;
  std::vector<std::vector<std::int64_t>> lags;
  std::vector<OracleCase> cases;
  int bootstrap_resamples = 1000;
  std::string variant = "standard";
  std::map<std::string, double> tolerances;
  json raw;

  double tol(const std::string& key, double fallback) const {
    const auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }

  std::string hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(raw.dump())));
    return std::string(buf);
  }
};

// --- schema -----------------------------------------------------------------

/// Schema accepted by the experiment runner.  Kind-specific field requirements
/// are listed under "x-kind-required" and enforced by the same validator.
inline json experiment_config_schema() {
  const json shape_schema = {{"type", "array"},
                             {"minItems", 1},
                             {"items", {{"type", "integer"}, {"minimum", 1}}}};
  const json t_point_schema = {
      {"type", "array"},
      {"minItems", 1},
      {"items",
       {{"type", "number"}, {"minimum", 0.0}, {"maximum", 1.0}}}};
  const json functional_schema = {
      {"description", "\"Pk:<k>\", \"power:<p>\", or {coeffs:{k:a_k,...}}"},
      {"oneOf",
       json::array({{{"type", "string"}},
                    {{"type", "object"},
                     {"required", json::array({"coeffs"})}}})}};
  json case_schema = {
      {"type", "object"},
      {"required", json::array({"hurst", "l", "functional", "p"})},
      {"additionalProperties", false},
      {"properties",
       {{"hurst",
         {{"type", "array"},
          {"minItems", 1},
          {"items",
           {{"type", "number"},
            {"exclusiveMinimum", 0.0},
            {"exclusiveMaximum", 1.0}}}}},
        {"l", shape_schema},
        {"functional", functional_schema},
        {"p", {{"type", "integer"}, {"minimum", 1}}}}}};
  return json{
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "fbsvar experiment configuration"},
      {"type", "object"},
      {"required", json::array({"kind", "name", "seed"})},
      {"additionalProperties", false},
      {"x-kind-required",
       {{"covariance", json::array({"hurst", "shape", "replications", "t_points"})},
        {"clt",
         json::array({"hurst", "shape", "functional", "replications", "t_points"})},
        {"nclt",
         json::array({"hurst", "shape_grid", "functional", "replications"})},
        {"flln", json::array({"hurst", "shape_grid", "power", "replications"})},
        {"moment-bound", json::array({"cases"})},
        {"oracle-agreement", json::array({"cases", "replications"})},
        {"beta-explosion", json::array({"hurst", "shape_grid", "power"})},
        {"interpolation",
         json::array({"hurst", "shape", "power", "replications", "t_points"})}}},
      {"properties",
       {{"kind",
         {{"type", "string"},
          {"enum", json::array({"covariance", "clt", "nclt", "flln",
                                "moment-bound", "oracle-agreement",
                                "beta-explosion", "interpolation"})}}},
        {"name", {{"type", "string"}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}}},
        {"replications", {{"type", "integer"}, {"minimum", 2}}},
        {"hurst",
         {{"type", "array"},
          {"minItems", 1},
          {"items",
           {{"type", "number"},
            {"exclusiveMinimum", 0.0},
            {"exclusiveMaximum", 1.0}}}}},
        {"shape", shape_schema},
        {"shape_grid",
         {{"type", "array"}, {"minItems", 1}, {"items", shape_schema}}},
        {"functional", functional_schema},
        {"power", {{"type", "integer"}, {"minimum", 1}}},
        {"t_points",
         {{"type", "array"}, {"minItems", 1}, {"items", t_point_schema}}},
        {"lags",
         {{"type", "array"},
          {"items", {{"type", "array"}, {"items", {{"type", "integer"}}}}}}},
        {"cases", {{"type", "array"}, {"minItems", 1}, {"items", case_schema}}},
        {"bootstrap_resamples", {{"type", "integer"}, {"minimum", 2}}},
        {"variant",
         {{"type", "string"},
          {"enum", json::array({"standard", "control"})}}},
        {"tolerances",
         {{"type", "object"},
          {"description",
           "per-statistic overrides: z, var_rel, kurt_floor, cauchy_floor, "
           "corr_floor, ln_beta_tol, fixed_point_tol, fixed_point_samples, "
           "region_lo, beta_floor_coeff, work_cap"}}}}}};
}

namespace detail {

inline void validate_node(const json& schema, const json& value,
                          const std::string& pointer) {
  if (schema.contains("oneOf")) {
    for (const auto& alt : schema.at("oneOf")) {
      try {
        validate_node(alt, value, pointer);
        return;
      } catch (const config_error&) {
      }
    }
    throw config_error(pointer, "matches no accepted alternative");
  }
  if (schema.contains("type")) {
    const std::string t = schema.at("type").get<std::string>();
    const bool ok =
        (t == "object" && value.is_object()) ||
        (t == "array" && value.is_array()) ||
        (t == "string" && value.is_string()) ||
        (t == "integer" && value.is_number_integer()) ||
        (t == "number" && value.is_number()) ||
        (t == "boolean" && value.is_boolean());
    if (!ok) throw config_error(pointer, "expected type " + t);
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema.at("enum"))
      if (e == value) found = true;
    if (!found) throw config_error(pointer, "value not in enum");
  }
  if (value.is_number()) {
    const double x = value.get<double>();
    if (schema.contains("minimum") && x < schema.at("minimum").get<double>())
      throw config_error(pointer, "below minimum");
    if (schema.contains("maximum") && x > schema.at("maximum").get<double>())
      throw config_error(pointer, "above maximum");
    if (schema.contains("exclusiveMinimum") &&
        x <= schema.at("exclusiveMinimum").get<double>())
      throw config_error(pointer, "at or below exclusive minimum");
    if (schema.contains("exclusiveMaximum") &&
        x >= schema.at("exclusiveMaximum").get<double>())
      throw config_error(pointer, "at or above exclusive maximum");
  }
  if (value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema.at("minItems").get<std::size_t>())
      throw config_error(pointer, "too few items");
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i)
        validate_node(schema.at("items"), value[i],
                      pointer + "/" + std::to_string(i));
    }
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& req : schema.at("required")) {
        const std::string key = req.get<std::string>();
        if (!value.contains(key))
          throw config_error(pointer + "/" + key, "missing required field");
      }
    }
    if (schema.contains("properties")) {
      const auto& props = schema.at("properties");
      for (const auto& [key, sub] : value.items()) {
        if (props.contains(key)) {
          validate_node(props.at(key), sub, pointer + "/" + key);
        } else if (schema.contains("additionalProperties") &&
                   schema.at("additionalProperties").is_boolean() &&
                   !schema.at("additionalProperties").get<bool>()) {
          throw config_error(pointer + "/" + key, "unknown field");
        }
      }
    }
  }
}

}  // namespace detail

/// Validates a raw config document against the emitted schema, including the
/// per-kind required-field table.  Throws config_error with a JSON pointer.
inline void validate_config(const json& doc) {
  const json schema = experiment_config_schema();
  detail::validate_node(schema, doc, "");
  const std::string kind = doc.at("kind").get<std::string>();
  const auto& per_kind = schema.at("x-kind-required");
  if (per_kind.contains(kind)) {
    for (const auto& req : per_kind.at(kind)) {
      const std::string key = req.get<std::string>();
      if (!doc.contains(key))
        throw config_error("/" + key,
                           "required for kind \"" + kind + "\"");
    }
  }
}

inline ExperimentConfig parse_config(const json& doc) {
  validate_config(doc);
  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.kind = kind_names().at(doc.at("kind").get<std::string>());
  cfg.name = doc.at("name").get<std::string>();
  cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("replications"))
    cfg.replications = doc.at("replications").get<std::int64_t>();
  if (doc.contains("hurst")) cfg.hurst = doc.at("hurst").get<RealVec>();
  if (doc.contains("shape"))
    cfg.shape = doc.at("shape").get<std::vector<std::int64_t>>();
  if (doc.contains("shape_grid"))
    cfg.shape_grid =
        doc.at("shape_grid").get<std::vector<std::vector<std::int64_t>>>();
  if (doc.contains("functional"))
    cfg.functional = parse_functional(doc.at("functional"), "/functional");
  if (doc.contains("power")) cfg.power = doc.at("power").get<int>();
  if (doc.contains("t_points"))
    cfg.t_points = doc.at("t_points").get<std::vector<RealVec>>();
  if (doc.contains("lags"))
    cfg.lags = doc.at("lags").get<std::vector<std::vector<std::int64_t>>>();
  if (doc.contains("bootstrap_resamples"))
    cfg.bootstrap_resamples = doc.at("bootstrap_resamples").get<int>();
  if (doc.contains("variant")) cfg.variant = doc.at("variant").get<std::string>();
  if (doc.contains("tolerances"))
    for (const auto& [key, v] : doc.at("tolerances").items())
      cfg.tolerances[key] = v.get<double>();
  if (doc.contains("cases")) {
    int index = 0;
    for (const auto& c : doc.at("cases")) {
      const std::string ptr = "/cases/" + std::to_string(index++);
      OracleCase oc;
      oc.hurst = c.at("hurst").get<RealVec>();
      oc.extents = c.at("l").get<std::vector<std::int64_t>>();
      oc.functional = parse_functional(c.at("functional"), ptr + "/functional");
      oc.p = c.at("p").get<int>();
      if (oc.hurst.size() != oc.extents.size())
        throw config_error(ptr, "hurst and l dimensions differ");
      std::string label = "H";
      for (double h : oc.hurst) label += format_full(h).substr(0, 4) + "_";
      label += "l";
      for (auto e : oc.extents) label += std::to_string(e) + "_";
      label += oc.functional.label + "_p" + std::to_string(oc.p);
      oc.label = label;
      cfg.cases.push_back(std::move(oc));
    }
  }
  return cfg;
}

// --- reports ----------------------------------------------------------------

/// One verified statistic.  mode describes the verdict rule:
///   z          |z| <= threshold
///   rel        |empirical - target| <= threshold * |target|
///   abs        |empirical - target| <= threshold
///   lower      empirical >= threshold
///   upper      empirical <= threshold
///   info       reported, never fails
struct Statistic {
  std::string name;
  double empirical = 0.0;
  double target = 0.0;
  double se = 0.0;
  double z = 0.0;
  std::string mode = "info";
  double threshold = 0.0;
  bool pass = true;
};

struct ExperimentReport {
  std::string kind;
  std::string name;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<Statistic> statistics;
  bool all_pass = true;

  json to_json() const {
    json stats = json::array();
    for (const auto& s : statistics) {
      stats.push_back(json{{"name", s.name},
                           {"empirical", s.empirical},
                           {"target", s.target},
                           {"se", s.se},
                           {"z", s.z},
                           {"mode", s.mode},
                           {"threshold", s.threshold},
                           {"pass", s.pass}});
    }
    return json{{"kind", kind},
                {"name", name},
                {"config_hash", config_hash},
                {"seed", seed},
                {"version", version},
                {"wall_seconds", wall_seconds},
                {"statistics", stats},
                {"all_pass", all_pass}};
  }

  std::string to_csv() const {
    std::string out = "name,empirical,target,se,z,mode,threshold,pass\n";
    for (const auto& s : statistics) {
      out += s.name + "," + format_full(s.empirical) + "," +
             format_full(s.target) + "," + format_full(s.se) + "," +
             format_full(s.z) + "," + s.mode + "," + format_full(s.threshold) +
             "," + (s.pass ? "1" : "0") + "\n";
    }
    return out;
  }
};

}  // namespace fbsvar
