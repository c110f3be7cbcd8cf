#pragma once

// Shared aliases and small utilities used across the ccm library:
// Eigen typedefs, camera-pair keys, deterministic text formatting for
// round-trippable files, and a tiny index-sharded parallel loop.

#include <Eigen/Dense>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace ccm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using BinaryMat = Eigen::MatrixXi;  // entries 0/1
using CameraPair = std::pair<int, int>;

// Normalized key for an unordered camera pair: smaller id first.
inline CameraPair pair_key(int a, int b) {
  return a <= b ? CameraPair{a, b} : CameraPair{b, a};
}

inline std::string pair_label(const CameraPair& pq) {
  return std::to_string(pq.first) + "-" + std::to_string(pq.second);
}

// Shortest text form that round-trips an IEEE double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Strict integer / double parsing; `where` names the file:line in errors.
inline int parse_int(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(t, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": expected integer, got '" + text + "'");
  }
  if (used != t.size())
    throw std::runtime_error(where + ": expected integer, got '" + text + "'");
  return v;
}

inline double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": expected number, got '" + text + "'");
  }
  if (used != t.size())
    throw std::runtime_error(where + ": expected number, got '" + text + "'");
  return v;
}

// Runs f(0..n-1) on up to `jobs` threads. Work is claimed by index from a
// shared counter; each index writes only its own slot, so results are
// identical to the sequential loop. First exception (by worker) is rethrown.
template <typename F>
void parallel_for(int n, int jobs, F&& f) {
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i; (i = next.fetch_add(1)) < n;) f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ccm
