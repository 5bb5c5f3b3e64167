// config.hpp - flat key-value run configuration with [section] headers, one
// problem per file. Parsing and serialization are exact inverses: parse(
// serialize(cfg)) reproduces cfg field-for-field (doubles are written with
// full precision). Lists are semicolon-joined; tuple entries use colons,
// e.g. layers = 0:0.2:1;0.2:0.4:0.1 or injection = 0:0.2;1.8:2.
//
// Example:
//
//   [problem]
//   type = five_spot
//   element = Q9
//   nx = 20
//
//   [model]
//   variant = barus_forchheimer
//   beta_b = 0.5
//   beta_f = 0.5
//
//   [formulation]
//   type = ls
//   weight = 2

#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/drag.hpp"
#include "dflow/formulations.hpp"
#include "dflow/mesh.hpp"

namespace dflow {

struct RunConfig {
  // [problem]
  std::string type = "five_spot";  // mms | five_spot | patch3d | reservoir | layered | staggered
  std::string element = "Q4";      // T3 | Q4 | Q9 | B8
  int nx = 20;
  int ny = 0;  // 0: same as nx
  int nz = 0;
  std::vector<double> h_list;  // mms mesh sizes; empty = {1/4,1/8,1/16,1/32,1/64}

  // [model]
  std::string variant = "darcy";  // darcy | barus | forchheimer | barus_forchheimer
  double mu0 = 1.0;
  double beta_b = 0.1;
  double beta_f = 0.5;
  double k = 1.0;
  double rho = 1.0;
  std::vector<std::array<double, 3>> layers;  // y0:y1:k, layered problem only

  // [formulation]
  std::string formulation = "ls";  // ls | vms
  int weight = 1;
  double theta = 1.0;

  // [solver]
  double tol = 1e-10;
  int max_iterations = 50;

  // [domain] (reservoir-family problems; others use fixed unit domains)
  std::array<double, 4> domain{0.0, 2.0, 0.0, 1.0};       // x0 x1 y0 y1
  std::vector<std::array<double, 4>> holes;               // x0:x1:y0:y1

  // [wells]
  double p_enh = 1000.0;
  std::vector<double> alpha_list;                         // five-spot weighting sweep
  std::vector<std::array<double, 2>> injection;           // spans on the top boundary
  std::vector<std::array<double, 2>> production;

  // [output]
  std::string out_dir = "out";
  bool vtk = true;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || trim(end).size())
    throw ConfigError("bad numeric value '" + s + "'");
  return v;
}

inline int to_int(const std::string& s) {
  const double v = to_double(s);
  const int i = static_cast<int>(v);
  if (i != v) throw ConfigError("expected integer, got '" + s + "'");
  return i;
}

inline bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("bad boolean value '" + s + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline std::vector<double> to_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ';'))
    if (!item.empty()) out.push_back(to_double(item));
  return out;
}

template <size_t N>
inline std::vector<std::array<double, N>> to_tuple_list(const std::string& s) {
  std::vector<std::array<double, N>> out;
  for (const auto& item : split(s, ';')) {
    if (item.empty()) continue;
    const auto parts = split(item, ':');
    if (parts.size() != N)
      throw ConfigError("expected " + std::to_string(N) + " colon-separated fields in '" +
                        item + "'");
    std::array<double, N> t{};
    for (size_t i = 0; i < N; ++i) t[i] = to_double(parts[i]);
    out.push_back(t);
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + fmt_double(v[i]);
  return out;
}

template <size_t N>
inline std::string fmt_tuple_list(const std::vector<std::array<double, N>>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ";";
    for (size_t j = 0; j < N; ++j) out += (j ? ":" : "") + fmt_double(v[i][j]);
  }
  return out;
}

inline void apply_config_key(RunConfig& cfg, const std::string& section, const std::string& key,
                             const std::string& value) {
  auto is = [&](const char* s, const char* k) { return section == s && key == k; };
  if (is("problem", "type")) cfg.type = value;
  else if (is("problem", "element")) cfg.element = value;
  else if (is("problem", "nx")) cfg.nx = to_int(value);
  else if (is("problem", "ny")) cfg.ny = to_int(value);
  else if (is("problem", "nz")) cfg.nz = to_int(value);
  else if (is("problem", "h_list")) cfg.h_list = to_double_list(value);
  else if (is("model", "variant")) cfg.variant = value;
  else if (is("model", "mu0")) cfg.mu0 = to_double(value);
  else if (is("model", "beta_b")) cfg.beta_b = to_double(value);
  else if (is("model", "beta_f")) cfg.beta_f = to_double(value);
  else if (is("model", "k")) cfg.k = to_double(value);
  else if (is("model", "rho")) cfg.rho = to_double(value);
  else if (is("model", "layers")) cfg.layers = to_tuple_list<3>(value);
  else if (is("formulation", "type")) cfg.formulation = value;
  else if (is("formulation", "weight")) cfg.weight = to_int(value);
  else if (is("formulation", "theta")) cfg.theta = to_double(value);
  else if (is("solver", "tol")) cfg.tol = to_double(value);
  else if (is("solver", "max_iterations")) cfg.max_iterations = to_int(value);
  else if (is("domain", "extent")) {
    const auto t = to_tuple_list<4>(value);
    if (t.size() != 1) throw ConfigError("domain.extent expects one x0:x1:y0:y1 tuple");
    cfg.domain = t[0];
  } else if (is("domain", "holes")) cfg.holes = to_tuple_list<4>(value);
  else if (is("wells", "p_enh")) cfg.p_enh = to_double(value);
  else if (is("wells", "alpha_list")) cfg.alpha_list = to_double_list(value);
  else if (is("wells", "injection")) cfg.injection = to_tuple_list<2>(value);
  else if (is("wells", "production")) cfg.production = to_tuple_list<2>(value);
  else if (is("output", "dir")) cfg.out_dir = value;
  else if (is("output", "vtk")) cfg.vtk = to_bool(value);
  else throw ConfigError("unknown config key [" + section + "] " + key);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      detail::apply_config_key(cfg, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt_double;
  std::ostringstream out;
  out << "[problem]\n"
      << "type = " << c.type << "\n"
      << "element = " << c.element << "\n"
      << "nx = " << c.nx << "\n"
      << "ny = " << c.ny << "\n"
      << "nz = " << c.nz << "\n"
      << "h_list = " << detail::fmt_list(c.h_list) << "\n\n"
      << "[model]\n"
      << "variant = " << c.variant << "\n"
      << "mu0 = " << fmt_double(c.mu0) << "\n"
      << "beta_b = " << fmt_double(c.beta_b) << "\n"
      << "beta_f = " << fmt_double(c.beta_f) << "\n"
      << "k = " << fmt_double(c.k) << "\n"
      << "rho = " << fmt_double(c.rho) << "\n"
      << "layers = " << detail::fmt_tuple_list(c.layers) << "\n\n"
      << "[formulation]\n"
      << "type = " << c.formulation << "\n"
      << "weight = " << c.weight << "\n"
      << "theta = " << fmt_double(c.theta) << "\n\n"
      << "[solver]\n"
      << "tol = " << fmt_double(c.tol) << "\n"
      << "max_iterations = " << c.max_iterations << "\n\n"
      << "[domain]\n"
      << "extent = " << fmt_double(c.domain[0]) << ":" << fmt_double(c.domain[1]) << ":"
      << fmt_double(c.domain[2]) << ":" << fmt_double(c.domain[3]) << "\n"
      << "holes = " << detail::fmt_tuple_list(c.holes) << "\n\n"
      << "[wells]\n"
      << "p_enh = " << fmt_double(c.p_enh) << "\n"
      << "alpha_list = " << detail::fmt_list(c.alpha_list) << "\n"
      << "injection = " << detail::fmt_tuple_list(c.injection) << "\n"
      << "production = " << detail::fmt_tuple_list(c.production) << "\n\n"
      << "[output]\n"
      << "dir = " << c.out_dir << "\n"
      << "vtk = " << (c.vtk ? "true" : "false") << "\n";
  return out.str();
}

// Override a single key, addressed as "section.key" (or a bare key when it is
// unambiguous). Used by CLI flag handling and sweeps.
inline void set_config_key(RunConfig& cfg, const std::string& name, const std::string& value) {
  const auto dot = name.find('.');
  if (dot != std::string::npos) {
    detail::apply_config_key(cfg, name.substr(0, dot), name.substr(dot + 1), value);
    return;
  }
  static const char* sections[] = {"problem", "model", "formulation",
                                   "solver",  "domain", "wells",       "output"};
  int hits = 0;
  std::string found;
  for (const char* s : sections) {
    RunConfig probe = cfg;
    try {
      detail::apply_config_key(probe, s, name, value);
      ++hits;
      found = s;
    } catch (const ConfigError&) {
    }
  }
  if (hits == 0) throw ConfigError("unknown config key '" + name + "'");
  if (hits > 1) throw ConfigError("ambiguous config key '" + name + "'; qualify with section");
  detail::apply_config_key(cfg, found, name, value);
}

// String <-> enum bridges shared by the runner and CLI.
inline ElemType parse_elem_type(const std::string& s) {
  if (s == "T3") return ElemType::T3;
  if (s == "Q4") return ElemType::Q4;
  if (s == "Q9") return ElemType::Q9;
  if (s == "B8") return ElemType::B8;
  throw ConfigError("unknown element type '" + s + "'");
}

inline std::string elem_type_name(ElemType t) {
  switch (t) {
    case ElemType::T3: return "T3";
    case ElemType::Q4: return "Q4";
    case ElemType::Q9: return "Q9";
    case ElemType::B8: return "B8";
  }
  throw InvalidArgumentError("bad element type");
}

inline DragVariant parse_variant(const std::string& s) {
  if (s == "darcy") return DragVariant::Darcy;
  if (s == "barus") return DragVariant::Barus;
  if (s == "forchheimer") return DragVariant::Forchheimer;
  if (s == "barus_forchheimer") return DragVariant::BarusForchheimer;
  throw ConfigError("unknown drag variant '" + s + "'");
}

inline std::string variant_name(DragVariant v) {
  switch (v) {
    case DragVariant::Darcy: return "darcy";
    case DragVariant::Barus: return "barus";
    case DragVariant::Forchheimer: return "forchheimer";
    case DragVariant::BarusForchheimer: return "barus_forchheimer";
  }
  throw InvalidArgumentError("bad drag variant");
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "ls") return Formulation::LS;
  if (s == "vms") return Formulation::VMS;
  throw ConfigError("unknown formulation '" + s + "'");
}

inline std::string formulation_name(Formulation f) {
  return f == Formulation::LS ? "ls" : "vms";
}

}  // namespace dflow
