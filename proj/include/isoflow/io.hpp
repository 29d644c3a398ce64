#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isoflow/linalg.hpp"
#include "isoflow/spectrum.hpp"
#include "isoflow/state.hpp"

namespace isoflow {

using json = nlohmann::json;

/// 17 significant digits; round-trips any double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json spectrum_to_json(const Spectrum& s) { return json{{"values", s.values()}}; }

inline Spectrum spectrum_from_json(const json& j) {
  if (!j.contains("values")) throw std::invalid_argument("spectrum JSON: missing \"values\"");
  return Spectrum(j.at("values").get<std::vector<double>>());
}

inline Spectrum load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spectrum file: " + path);
  json j;
  in >> j;
  return spectrum_from_json(j);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const int n = static_cast<int>(rows.size());
  Matrix m(n, n == 0 ? 0 : static_cast<int>(rows[0].size()));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m.cols())
      throw std::invalid_argument("matrix JSON: ragged rows");
    for (int c = 0; c < m.cols(); ++c) m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }
  return m;
}

inline json state_to_json(const SymState& s) {
  return json{{"matrix", matrix_to_json(s.matrix())}, {"spectrum", spectrum_to_json(s.spectrum())}};
}

inline SymState state_from_json(const json& j) {
  return SymState::checked(matrix_from_json(j.at("matrix")), spectrum_from_json(j.at("spectrum")));
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
    out << "\n";
  }
}

}  // namespace isoflow
