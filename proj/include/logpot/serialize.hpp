#pragma once

// JSON for potentials, grid measures and equilibrium results; a CSV writer
// with a fixed dialect (comma, '.', header row, LF, inf/nan tokens).

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "logpot/equilibrium.hpp"
#include "logpot/format.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"

namespace logpot {

using Json = nlohmann::ordered_json;

inline constexpr const char* kLibraryVersion = "0.1.0";

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const TabulatedFunction& f) {
  return Json{{"lo", f.lo()}, {"hi", f.hi()}, {"values", f.values()}};
}

inline TabulatedFunction tabulated_from_json(const Json& j) {
  return TabulatedFunction(j.at("lo").get<double>(), j.at("hi").get<double>(),
                           j.at("values").get<std::vector<double>>());
}

inline Json to_json(const Potential& V) {
  Json j;
  switch (V.kind()) {
    case Potential::Kind::polynomial: j["kind"] = "polynomial"; break;
    case Potential::Kind::perturbed: j["kind"] = "perturbed"; break;
    case Potential::Kind::tabulated: j["kind"] = "tabulated"; break;
  }
  if (V.kind() != Potential::Kind::tabulated) j["coeffs"] = V.coeffs();
  if (V.table()) j["table"] = to_json(*V.table());
  if (!V.perturbations().empty()) {
    j["perturbations"] = Json::array();
    for (const auto& p : V.perturbations()) j["perturbations"].push_back(to_json(p));
  }
  j["alpha"] = V.growth().alpha;
  j["beta"] = V.growth().beta;
  j["degree"] = V.growth().degree;
  return j;
}

/// Parses {"kind": "polynomial" | "perturbed" | "tabulated", ...}. Malformed
/// specs raise InvalidArgument.
inline Potential potential_from_json(const Json& j) {
  try {
    const Growth g{j.at("alpha").get<double>(), j.value("beta", 0.0), j.value("degree", 2.0)};
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "polynomial") return Potential::polynomial(j.at("coeffs").get<std::vector<double>>(), g);
    if (kind == "perturbed") {
      std::vector<TabulatedFunction> ps;
      for (const auto& p : j.at("perturbations")) ps.push_back(tabulated_from_json(p));
      return Potential::perturbed(j.at("coeffs").get<std::vector<double>>(), std::move(ps), g);
    }
    if (kind == "tabulated") return Potential::tabulated(tabulated_from_json(j.at("table")), g);
    throw InvalidArgument("potential: unknown kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("potential: ") + e.what());
  }
}

inline Json to_json(const GridMeasure& m) {
  return Json{{"lo", m.lo()}, {"hi", m.hi()}, {"density", m.density()}};
}

inline GridMeasure grid_measure_from_json(const Json& j) {
  try {
    return GridMeasure(j.at("lo").get<double>(), j.at("hi").get<double>(),
                       j.at("density").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("measure: ") + e.what());
  }
}

inline Json to_json(const EquilibriumResult& r) {
  Json support = Json::array();
  for (const auto& s : r.support) support.push_back({s.lo, s.hi});
  return Json{{"c_v", r.c_v},
              {"C_v", r.C_v},
              {"support", support},
              {"residual_on", r.residual_on},
              {"residual_off", r.residual_off},
              {"dual_gap", r.dual_gap},
              {"iterations", r.iterations},
              {"measure", to_json(r.measure)}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidArgument("'" + path + "': " + e.what());
  }
}

/// FNV-1a over the compact dump; stable across platforms and runs.
inline std::string spec_hash(const Json& j) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    row(header);
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InvalidArgument("CsvWriter: wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
    return *this;
  }

  const std::string& str() const noexcept { return body_; }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << body_;
  }

 private:
  std::size_t columns_;
  std::string body_;
};

inline std::string cell(double v) { return format_number(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }

}  // namespace logpot
