#pragma once

#include <fstream>

#include "nlohmann/json.hpp"
#include "sltmpc/common.hpp"

namespace sltmpc {

inline nlohmann::json json_mat(const Mat& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < M.rows(); ++r)
    rows.push_back(std::vector<double>(M.row(r).begin(), M.row(r).end()));
  return rows;
}

inline nlohmann::json json_vec(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Mat mat_from_json(const nlohmann::json& j) {
  if (j.empty()) return Mat(0, 0);
  Mat M(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c) M(r, c) = j[r][c];
  return M;
}

inline Vec vec_from_json(const nlohmann::json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i];
  return v;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << j.dump(1);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  return nlohmann::json::parse(is);
}

}  // namespace sltmpc
