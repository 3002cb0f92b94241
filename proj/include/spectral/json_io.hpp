#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "spectral/core.hpp"
#include "spectral/errors.hpp"

namespace spectral {

using Json = nlohmann::ordered_json;

// Complex numbers travel as [re, im] pairs in every file format.
inline Json to_json(cd z) { return Json::array({z.real(), z.imag()}); }

inline cd complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParameterError("expected [re, im] pair at " + where);
  return cd(j[0].get<double>(), j[1].get<double>());
}

inline Json to_json(const std::vector<cd>& v) {
  Json a = Json::array();
  for (cd z : v) a.push_back(to_json(z));
  return a;
}

inline Json to_json(const VecC& v) {
  Json a = Json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(to_json(v(k)));
  return a;
}

inline Json to_json(const MatC& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<cd> complex_vector_from_json(const Json& j,
                                                const std::string& where) {
  if (!j.is_array()) throw ParameterError("expected array at " + where);
  std::vector<cd> v;
  v.reserve(j.size());
  for (size_t k = 0; k < j.size(); ++k)
    v.push_back(complex_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return v;
}

inline VecC vec_from_json(const Json& j, const std::string& where) {
  const auto v = complex_vector_from_json(j, where);
  VecC out(v.size());
  for (size_t k = 0; k < v.size(); ++k) out(k) = v[k];
  return out;
}

inline MatC mat_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ParameterError("expected non-empty matrix at " + where);
  const size_t rows = j.size();
  std::vector<std::vector<cd>> data;
  size_t cols = 0;
  for (size_t i = 0; i < rows; ++i) {
    auto row = complex_vector_from_json(j[i], where + "[" + std::to_string(i) + "]");
    if (i == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw ParameterError("ragged matrix at " + where + " row " +
                           std::to_string(i));
    data.push_back(std::move(row));
  }
  MatC m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t k = 0; k < cols; ++k) m(i, k) = data[i][k];
  return m;
}

inline const Json& require_key(const Json& j, const std::string& key,
                               const std::string& where) {
  if (!j.contains(key))
    throw ParameterError("missing key \"" + key + "\" in " + where);
  return j.at(key);
}

}  // namespace spectral
