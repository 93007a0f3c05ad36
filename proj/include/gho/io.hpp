#pragma once

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gho/almost_convex.hpp"
#include "gho/model.hpp"
#include "gho/partition.hpp"
#include "json.hpp"

namespace gho::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw FormatError(where + ": unknown field '" + k + "'");
}

template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  return j.contains(key) ? field<T>(j, key, where) : fallback;
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b < e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw FormatError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Numeric rows of a CSV file with `cols` columns. A non-numeric first line is taken as a header.
inline std::vector<std::vector<double>> read_rows(std::istream& in, std::size_t cols) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols)
      throw FormatError("csv line " + std::to_string(n) + ": expected " + std::to_string(cols) + " columns");
    std::vector<double> row;
    try {
      for (const auto& c : cells) row.push_back(parse_double(c, n));
    } catch (const FormatError&) {
      if (rows.empty() && n == 1) continue;
      throw;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model files
//
// {"kernel": {"type": "harper", "t": 1},
//  "phase":  {"type": "constant_field", "B": 1},
//  "label":  "harper"}
//
// kernel types: harper {t}; random_ti {seed, range, C, beta}; modulated {base, amplitude, k1, k2}
// phase types:  constant_field {B}; bump_field {B0, amp, width}; zero {}

inline KernelSpec kernel_from_json(const json& j) {
  const std::string where = "kernel";
  const auto type = detail::field<std::string>(j, "type", where);
  if (type == "harper") {
    detail::only_keys(j, {"type", "t"}, where);
    return builtin::harper(detail::field_or<double>(j, "t", 1.0, where));
  }
  if (type == "random_ti") {
    detail::only_keys(j, {"type", "seed", "range", "C", "beta"}, where);
    return builtin::random_translation_invariant(detail::field<std::uint64_t>(j, "seed", where),
                                                 detail::field<std::int64_t>(j, "range", where),
                                                 detail::field<double>(j, "C", where),
                                                 detail::field<double>(j, "beta", where));
  }
  if (type == "modulated") {
    detail::only_keys(j, {"type", "base", "amplitude", "k1", "k2"}, where);
    if (!j.contains("base")) throw FormatError("kernel: missing field 'base'");
    return builtin::modulated(kernel_from_json(j.at("base")), detail::field<double>(j, "amplitude", where),
                              detail::field<double>(j, "k1", where), detail::field<double>(j, "k2", where));
  }
  throw FormatError("kernel: unknown type '" + type + "'");
}

inline PhaseSpec phase_from_json(const json& j) {
  const std::string where = "phase";
  const auto type = detail::field<std::string>(j, "type", where);
  if (type == "constant_field") {
    detail::only_keys(j, {"type", "B"}, where);
    return builtin::constant_field(detail::field_or<double>(j, "B", 1.0, where));
  }
  if (type == "bump_field") {
    detail::only_keys(j, {"type", "B0", "amp", "width"}, where);
    return builtin::bump_field(detail::field<double>(j, "B0", where), detail::field<double>(j, "amp", where),
                               detail::field<double>(j, "width", where));
  }
  if (type == "zero") {
    detail::only_keys(j, {"type"}, where);
    return builtin::zero_phase();
  }
  throw FormatError("phase: unknown type '" + type + "'");
}

inline GHOModel model_from_json(const json& j) {
  detail::only_keys(j, {"kernel", "phase", "label"}, "model");
  if (!j.contains("kernel") || !j.contains("phase")) throw FormatError("model: needs 'kernel' and 'phase'");
  auto kernel = kernel_from_json(j.at("kernel"));
  auto phase = phase_from_json(j.at("phase"));
  const auto label = detail::field_or<std::string>(j, "label", kernel.name() + "/" + phase.name(), "model");
  return {std::move(kernel), std::move(phase), label};
}

inline GHOModel load_model(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  return model_from_json(j);
}

/// The default model when no file is given: Harper with t = 1 in the B = 1 symmetric gauge.
inline GHOModel harper_model(double t = 1.0, double B = 1.0) {
  return {builtin::harper(t), builtin::constant_field(B), "harper"};
}

// ---------------------------------------------------------------------------
// CSV

/// Two columns (x, F(x)) with strictly increasing x.
inline SampledFunction read_samples(std::istream& in) {
  SampledFunction s;
  for (const auto& r : detail::read_rows(in, 2)) {
    s.x.push_back(r[0]);
    s.f.push_back(r[1]);
  }
  s.validate();
  return s;
}

inline SampledFunction read_samples(const std::string& path) {
  auto in = detail::open_in(path);
  return read_samples(in);
}

/// Rows (x1, x2, re, im); repeated points are rejected.
inline FiniteState read_state(std::istream& in) {
  FiniteState phi;
  std::set<LatticePoint> seen;
  for (const auto& r : detail::read_rows(in, 4)) {
    const LatticePoint x{std::int64_t(r[0]), std::int64_t(r[1])};
    if (double(x.x1) != r[0] || double(x.x2) != r[1]) throw FormatError("state csv: coordinates must be integers");
    if (!seen.insert(x).second) throw FormatError("state csv: repeated lattice point");
    phi.set(x, cplx(r[2], r[3]));
  }
  return phi;
}

inline FiniteState read_state(const std::string& path) {
  auto in = detail::open_in(path);
  return read_state(in);
}

/// Shortest decimal that round-trips.
inline std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline void write_state(std::ostream& out, const FiniteState& phi) {
  out << "x1,x2,re,im\n";
  for (const auto& [x, v] : phi.support())
    out << x.x1 << ',' << x.x2 << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
}

}  // namespace gho::io
