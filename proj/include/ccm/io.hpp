#pragma once

// Text formats for learned metrics (ccmm) and small CSV helpers shared by
// the run-directory writer and reader.
//
// ccmm layout:
//   line 1:  ccmm 1 <cam_p> <cam_q> <dim>
//   then <dim> rows of <dim> space-separated values.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccm/core.hpp"
#include "ccm/metric_learn.hpp"

namespace ccm {

inline void save_metric(const MetricModel& model, const std::string& path) {
  if (model.m.rows() != model.m.cols() || model.m.rows() < 1)
    throw std::invalid_argument("save_metric: metric must be square and non-empty");
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const int d = static_cast<int>(model.m.rows());
  out << "ccmm 1 " << model.cam_p << ' ' << model.cam_q << ' ' << d << "\n";
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << format_double(model.m(i, j));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline MetricModel load_metric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ":1: missing header");
  std::istringstream hs(trim(line));
  std::string magic;
  int version = 0;
  MetricModel model;
  int d = 0;
  if (!(hs >> magic >> version >> model.cam_p >> model.cam_q >> d) ||
      magic != "ccmm")
    throw std::runtime_error(path + ":1: expected header 'ccmm 1 <p> <q> <dim>'");
  std::string rest;
  if (hs >> rest) throw std::runtime_error(path + ":1: trailing tokens in header");
  if (version != 1)
    throw std::runtime_error(path + ":1: unsupported ccmm version " +
                             std::to_string(version));
  if (d < 1) throw std::runtime_error(path + ":1: dimension must be positive");
  model.m.resize(d, d);
  for (int i = 0; i < d; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated after " + std::to_string(i) +
                               " matrix rows");
    const std::string where = path + ":" + std::to_string(i + 2);
    std::istringstream rs(line);
    for (int j = 0; j < d; ++j) {
      std::string tok;
      if (!(rs >> tok))
        throw std::runtime_error(where + ": expected " + std::to_string(d) +
                                 " values in row");
      model.m(i, j) = parse_double(tok, where);
    }
    std::string extra;
    if (rs >> extra)
      throw std::runtime_error(where + ": trailing tokens in matrix row");
  }
  return model;
}

// Reads a CSV file with a required header line; returns data rows split on
// commas. Used by the run-directory reader.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw std::runtime_error(path + ":1: expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  const std::size_t want = split(header, ',').size();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    rows.push_back(split(row, ','));
    if (rows.back().size() != want)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(want) +
                               " fields, got " + std::to_string(rows.back().size()));
  }
  return rows;
}

}  // namespace ccm
