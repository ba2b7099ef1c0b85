#pragma once

// JSON forms of the exposure spec, the design and the simulation config, and
// a small CSV reader for unit-level data.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/exposure.hpp"
#include "netspill/graph.hpp"
#include "netspill/montecarlo.hpp"

namespace netspill {

using Json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses JSON text; syntax errors are reported with line and column.
inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(what + ": invalid JSON at line " + std::to_string(line) + ", column " +
                     std::to_string(col));
  }
}

namespace detail {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

template <class E, std::size_t N>
E enum_from(const Json& j, const std::string& where, const EnumName<E> (&table)[N]) {
  if (!j.is_string()) throw InputError(where + ": expected a string");
  const auto s = j.get<std::string>();
  for (const auto& t : table)
    if (s == t.name) return t.value;
  std::string allowed;
  for (const auto& t : table) allowed += (allowed.empty() ? "" : ", ") + std::string(t.name);
  throw InputError(where + ": unknown value '" + s + "' (expected one of " + allowed + ")");
}

template <class E, std::size_t N>
const char* enum_name(E v, const EnumName<E> (&table)[N]) {
  for (const auto& t : table)
    if (t.value == v) return t.name;
  return "?";
}

inline const EnumName<ComponentKind> kKinds[] = {
    {ComponentKind::Own, "own"},
    {ComponentKind::Share, "share"},
    {ComponentKind::Count, "count"},
    {ComponentKind::Any, "any"},
    {ComponentKind::SecondShare, "second_share"},
    {ComponentKind::InteractionOwnShare, "own_x_share"},
    {ComponentKind::Category, "category"},
    {ComponentKind::CensorAware, "censor_aware"},
};
inline const EnumName<Denominator> kDenominators[] = {
    {Denominator::Network, "network"},
    {Denominator::SampledNeighbors, "sampled_neighbors"},
};
inline const EnumName<CategoryKind> kCategories[] = {
    {CategoryKind::TreatedExposed, "treated_exposed"},
    {CategoryKind::TreatedUnexposed, "treated_unexposed"},
    {CategoryKind::UntreatedExposed, "untreated_exposed"},
};
inline const EnumName<NetworkSource> kSources[] = {
    {NetworkSource::Population, "population"},
    {NetworkSource::Sampled, "sampled"},
    {NetworkSource::Censored, "censored"},
};
inline const EnumName<SamplingScheme> kSchemes[] = {
    {SamplingScheme::InducedSubgraph, "induced"},
    {SamplingScheme::Star, "star"},
};
inline const EnumName<SpecPreset> kPresets[] = {
    {SpecPreset::NoOverlap, "no_overlap"},
    {SpecPreset::Overlap, "overlap"},
    {SpecPreset::CorrectlySpecified, "correctly_specified"},
};
inline const EnumName<Theta2Source> kTheta2[] = {
    {Theta2Source::ClusteringCoefficient, "clustering_coefficient"},
    {Theta2Source::NormalizedDegree, "normalized_degree"},
};

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(where + ": unknown key '" + key + "'");
  }
}

inline double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

inline std::uint64_t get_count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw InputError(where + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline bool get_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw InputError(where + ": expected true or false");
  return j.get<bool>();
}

}  // namespace detail

inline const char* to_string(NetworkSource s) { return detail::enum_name(s, detail::kSources); }

inline Component component_from_json(const Json& j, const std::string& where) {
  detail::check_keys(j, where,
                     {"kind", "name", "denominator", "exclude_triangles", "category", "cap", "zero_if_censored", "inner"});
  if (!j.contains("kind")) throw InputError(where + ": missing 'kind'");
  Component c = Component::of(detail::enum_from(j.at("kind"), where + ".kind", detail::kKinds));
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw InputError(where + ".name: expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (j.contains("denominator")) {
    if (c.kind != ComponentKind::Share && c.kind != ComponentKind::SecondShare &&
        c.kind != ComponentKind::InteractionOwnShare)
      throw InputError(where + ".denominator: only share-type components take a denominator");
    c.denominator = detail::enum_from(j["denominator"], where + ".denominator", detail::kDenominators);
  }
  if (j.contains("exclude_triangles")) {
    if (c.kind != ComponentKind::SecondShare)
      throw InputError(where + ".exclude_triangles: only valid for second-order components");
    c.exclude_triangles = detail::get_bool(j["exclude_triangles"], where + ".exclude_triangles");
  }
  if (j.contains("category")) {
    if (c.kind != ComponentKind::Category) throw InputError(where + ".category: only valid for kind 'category'");
    c.category = detail::enum_from(j["category"], where + ".category", detail::kCategories);
  }
  if (c.kind == ComponentKind::CensorAware) {
    if (!j.contains("inner")) throw InputError(where + ": censor_aware needs 'inner'");
    if (!j.contains("cap")) throw InputError(where + ": censor_aware needs 'cap'");
    c.inner.push_back(component_from_json(j["inner"], where + ".inner"));
    c.cap = detail::get_count(j["cap"], where + ".cap");
    if (j.contains("zero_if_censored"))
      c.zero_if_censored = detail::get_bool(j["zero_if_censored"], where + ".zero_if_censored");
  } else if (j.contains("inner") || j.contains("cap") || j.contains("zero_if_censored")) {
    throw InputError(where + ": 'inner', 'cap' and 'zero_if_censored' are only valid for censor_aware");
  }
  return c;
}

inline Json component_to_json(const Component& c) {
  Json j;
  j["kind"] = detail::enum_name(c.kind, detail::kKinds);
  if (!c.name.empty()) j["name"] = c.name;
  switch (c.kind) {
    case ComponentKind::Share:
    case ComponentKind::InteractionOwnShare:
      j["denominator"] = detail::enum_name(c.denominator, detail::kDenominators);
      break;
    case ComponentKind::SecondShare:
      j["denominator"] = detail::enum_name(c.denominator, detail::kDenominators);
      j["exclude_triangles"] = c.exclude_triangles;
      break;
    case ComponentKind::Category: j["category"] = detail::enum_name(c.category, detail::kCategories); break;
    case ComponentKind::CensorAware:
      j["inner"] = component_to_json(c.inner.at(0));
      j["cap"] = c.cap;
      j["zero_if_censored"] = c.zero_if_censored;
      break;
    default: break;
  }
  return j;
}

/// {"source": "sampled", "components": [{"kind": "own"}, ...]}
inline ExposureSpec exposure_spec_from_json(const Json& j, const std::string& where = "spec") {
  detail::check_keys(j, where, {"source", "components"});
  ExposureSpec spec;
  if (j.contains("source")) spec.source = detail::enum_from(j["source"], where + ".source", detail::kSources);
  if (!j.contains("components") || !j["components"].is_array())
    throw InputError(where + ": 'components' must be an array");
  for (std::size_t k = 0; k < j["components"].size(); ++k)
    spec.components.push_back(
        component_from_json(j["components"][k], where + ".components[" + std::to_string(k) + "]"));
  spec.validate();
  return spec;
}

inline Json exposure_spec_to_json(const ExposureSpec& spec) {
  Json j;
  j["source"] = to_string(spec.source);
  j["components"] = Json::array();
  for (const auto& c : spec.components) j["components"].push_back(component_to_json(c));
  return j;
}

inline ExposureSpec load_exposure_spec(const std::string& path) {
  return exposure_spec_from_json(parse_json(read_text_file(path), path), path);
}

inline SamplingScheme parse_scheme(const std::string& s) {
  return detail::enum_from(Json(s), "scheme", detail::kSchemes);
}

inline Json design_to_json(const DesignSpec& d) {
  Json j;
  j["rho"] = d.rho;
  if (d.p.size() == 1)
    j["p"] = d.p[0];
  else
    j["p"] = d.p;
  j["scheme"] = to_string(d.scheme);
  if (d.censor_cap) j["censor_cap"] = *d.censor_cap;
  return j;
}

inline SimulationConfig simulation_config_from_json(const Json& j, const std::string& where = "config") {
  detail::check_keys(j, where,
                     {"graph", "index_base", "graph_nodes", "synthetic_nodes", "synthetic_edges", "rho_grid", "p",
                      "replications", "dgp", "specs", "scheme", "seed", "threads", "hac_k", "standard_errors",
                      "confidence"});
  SimulationConfig c;
  if (j.contains("graph") && !j["graph"].is_null()) {
    if (!j["graph"].is_string()) throw InputError(where + ".graph: expected a path string");
    c.graph_path = j["graph"].get<std::string>();
  }
  if (j.contains("index_base")) {
    const auto b = detail::get_count(j["index_base"], where + ".index_base");
    if (b > 1) throw InputError(where + ".index_base: must be 0 or 1");
    c.index_base = b ? IndexBase::One : IndexBase::Zero;
  }
  if (j.contains("graph_nodes")) c.graph_nodes = detail::get_count(j["graph_nodes"], where + ".graph_nodes");
  if (j.contains("synthetic_nodes"))
    c.synthetic_nodes = detail::get_count(j["synthetic_nodes"], where + ".synthetic_nodes");
  if (j.contains("synthetic_edges"))
    c.synthetic_edges = detail::get_count(j["synthetic_edges"], where + ".synthetic_edges");
  if (j.contains("rho_grid")) {
    if (!j["rho_grid"].is_array()) throw InputError(where + ".rho_grid: expected an array");
    c.rho_grid.clear();
    for (std::size_t k = 0; k < j["rho_grid"].size(); ++k)
      c.rho_grid.push_back(detail::get_number(j["rho_grid"][k], where + ".rho_grid[" + std::to_string(k) + "]"));
  }
  if (j.contains("p")) c.p = detail::get_number(j["p"], where + ".p");
  if (j.contains("replications")) c.replications = detail::get_count(j["replications"], where + ".replications");
  if (j.contains("dgp")) {
    const auto& d = j["dgp"];
    const std::string w = where + ".dgp";
    detail::check_keys(d, w, {"exp_mean", "theta2_source", "theta3", "nu_sd"});
    if (d.contains("exp_mean")) c.dgp.exp_mean = detail::get_number(d["exp_mean"], w + ".exp_mean");
    if (d.contains("theta2_source"))
      c.dgp.theta2 = detail::enum_from(d["theta2_source"], w + ".theta2_source", detail::kTheta2);
    if (d.contains("theta3")) c.dgp.theta3 = detail::get_number(d["theta3"], w + ".theta3");
    if (d.contains("nu_sd")) c.dgp.nu_sd = detail::get_number(d["nu_sd"], w + ".nu_sd");
    if (!(c.dgp.exp_mean > 0.0)) throw InputError(w + ".exp_mean: must be positive");
    if (!(c.dgp.nu_sd >= 0.0)) throw InputError(w + ".nu_sd: must be non-negative");
  }
  if (j.contains("specs")) {
    const auto& s = j["specs"];
    c.specs.clear();
    if (s.is_string()) {
      c.specs.push_back(detail::enum_from(s, where + ".specs", detail::kPresets));
    } else if (s.is_array()) {
      for (std::size_t k = 0; k < s.size(); ++k)
        c.specs.push_back(detail::enum_from(s[k], where + ".specs[" + std::to_string(k) + "]", detail::kPresets));
    } else {
      throw InputError(where + ".specs: expected a name or an array of names");
    }
  }
  if (j.contains("scheme")) c.scheme = detail::enum_from(j["scheme"], where + ".scheme", detail::kSchemes);
  if (j.contains("seed")) c.seed = detail::get_count(j["seed"], where + ".seed");
  if (j.contains("threads")) c.threads = detail::get_count(j["threads"], where + ".threads");
  if (j.contains("hac_k") && !j["hac_k"].is_null()) c.hac_k = detail::get_count(j["hac_k"], where + ".hac_k");
  if (j.contains("standard_errors"))
    c.standard_errors = detail::get_bool(j["standard_errors"], where + ".standard_errors");
  if (j.contains("confidence")) c.confidence = detail::get_number(j["confidence"], where + ".confidence");
  c.validate();
  return c;
}

/// Thread count is left out: it does not change the report.
inline Json simulation_config_to_json(const SimulationConfig& c) {
  Json j;
  j["graph"] = c.graph_path.empty() ? Json(nullptr) : Json(c.graph_path);
  j["index_base"] = c.index_base == IndexBase::One ? 1 : 0;
  if (c.graph_path.empty()) {
    j["synthetic_nodes"] = c.synthetic_nodes;
    j["synthetic_edges"] = c.synthetic_edges;
  }
  j["rho_grid"] = c.rho_grid;
  j["p"] = c.p;
  j["replications"] = c.replications;
  j["dgp"] = {{"exp_mean", c.dgp.exp_mean},
              {"theta2_source", detail::enum_name(c.dgp.theta2, detail::kTheta2)},
              {"theta3", c.dgp.theta3},
              {"nu_sd", c.dgp.nu_sd}};
  j["specs"] = Json::array();
  for (auto s : c.specs) j["specs"].push_back(to_string(s));
  j["scheme"] = to_string(c.scheme);
  j["seed"] = c.seed;
  j["hac_k"] = c.hac_k ? Json(*c.hac_k) : Json(nullptr);
  j["standard_errors"] = c.standard_errors;
  j["confidence"] = c.confidence;
  return j;
}

/// A relative graph path is taken relative to the config file.
inline SimulationConfig load_simulation_config(const std::string& path) {
  SimulationConfig c = simulation_config_from_json(parse_json(read_text_file(path), path), path);
  if (!c.graph_path.empty() && std::filesystem::path(c.graph_path).is_relative())
    c.graph_path = (std::filesystem::path(path).parent_path() / c.graph_path).lexically_normal().string();
  return c;
}

/// Comma-separated table with a header row. Fields may be double-quoted.
class CsvTable {
 public:
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based file line of each row.
  std::vector<std::size_t> lines;

  std::size_t size() const { return rows.size(); }

  bool has(const std::string& name) const { return find(name) < header.size(); }

  std::size_t find(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    return header.size();
  }

  std::size_t require(const std::string& name) const {
    const std::size_t c = find(name);
    if (c == header.size()) throw InputError(source + ": missing column '" + name + "'");
    return c;
  }

  /// Values of a numeric column. When `needed` is given, blank fields on
  /// rows with needed[r] == 0 are read as 0.
  std::vector<double> numbers(const std::string& name, const Indicator* needed = nullptr) const {
    const std::size_t c = require(name);
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string& f = rows[r][c];
      auto where = [&] {
        return source + ": line " + std::to_string(lines[r]) + ", column " + std::to_string(c + 1) + " ('" + name +
               "')";
      };
      if (f.empty() && needed && !(*needed)[r]) {
        out[r] = 0.0;
        continue;
      }
      if (f.empty()) throw InputError(where() + ": missing value");
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw InputError(where() + ": '" + f + "' is not a finite number");
      out[r] = v;
    }
    return out;
  }

  Indicator indicators(const std::string& name) const {
    const auto v = numbers(name);
    Indicator out(v.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (v[r] != 0.0 && v[r] != 1.0)
        throw InputError(source + ": line " + std::to_string(lines[r]) + ", column '" + name + "': expected 0 or 1");
      out[r] = static_cast<std::uint8_t>(v[r]);
    }
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw InputError(where + ": unterminated quote");
  out.push_back(field);
  for (auto& f : out) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
  }
  return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    auto fields = detail::split_csv_line(line, source + ": line " + std::to_string(lineno));
    if (t.header.empty()) {
      t.header = std::move(fields);
      for (std::size_t a = 0; a < t.header.size(); ++a) {
        if (t.header[a].empty()) throw InputError(source + ": empty column name in header");
        for (std::size_t b = 0; b < a; ++b)
          if (t.header[a] == t.header[b]) throw InputError(source + ": duplicate column '" + t.header[a] + "'");
      }
      continue;
    }
    if (fields.size() != t.header.size())
      throw InputError(source + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw InputError(source + ": empty file (a header row is required)");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_csv(in, path);
}

/// FNV-1a, used to tag reports with the configuration that produced them.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = digits[v & 0xF];
  return s;
}

}  // namespace netspill
