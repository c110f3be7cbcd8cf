#pragma once

// Run-directory layout shared by the CLI writer (after a pipeline run) and
// reader (for re-evaluation). Everything under the directory is plain text
// and deterministic, so identical inputs produce byte-identical trees.
//
//   <out>/
//     config.txt            effective configuration, sorted `key = value`
//     clusters.csv          camera_id,cluster_index,tracklet_id
//     state/t<k>/
//       matches.csv         p,q,i,j,cost
//       reliability.csv     p,q,i,j,direct,transitive,reliability,kept
//       trace.csv           p,q,objective,objective_prev,converged,no_consistent
//       metric_trace.csv    pair,iter,objective,step,min_eig
//       metric_<p>_<q>.ccmm
//     report.json           written for full runs only
//
// The report is assembled from a ReportInputs bundle that both the writer
// (from in-memory pipeline state) and the reader (from files) can produce;
// every number in it round-trips exactly through the text artifacts.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccm/core.hpp"
#include "ccm/dataset.hpp"
#include "ccm/eval.hpp"
#include "ccm/io.hpp"
#include "ccm/pipeline.hpp"

namespace ccm {

inline void write_config_file(const std::string& path,
                              const std::map<std::string, std::string>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty() || row[0] == '#') continue;
    const std::size_t eq = row.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    entries[trim(row.substr(0, eq))] = trim(row.substr(eq + 1));
  }
  return entries;
}

inline void write_clusters_csv(const std::string& path,
                               const std::map<int, ClusterSet>& clusters,
                               const CameraDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "camera_id,cluster_index,tracklet_id\n";
  for (const auto& [cam, cset] : clusters) {
    const auto it = ds.cameras.find(cam);
    if (it == ds.cameras.end())
      throw std::invalid_argument("write_clusters_csv: camera " +
                                  std::to_string(cam) + " missing from dataset");
    for (int c = 0; c < cset.num_clusters(); ++c)
      for (int m : cset.clusters[static_cast<std::size_t>(c)])
        out << cam << ',' << c << ','
            << it->second[static_cast<std::size_t>(m)].tracklet_id << "\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

// One iteration's artifacts under state/t<k>/.
inline void write_state_dir(const std::string& dir, const IterationState& state,
                            int theta) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/matches.csv");
    if (!out) throw std::runtime_error(dir + "/matches.csv: cannot open for writing");
    out << "p,q,i,j,cost\n";
    for (const auto& [key, pair] : state.pairs)
      for (int i = 0; i < pair.assignment.x.rows(); ++i)
        for (int j = 0; j < pair.assignment.x.cols(); ++j)
          if (pair.assignment.x(i, j) != 0)
            out << key.first << ',' << key.second << ',' << i << ',' << j << ','
                << format_double(pair.costs.cost(i, j)) << "\n";
  }
  {
    std::ofstream out(dir + "/reliability.csv");
    if (!out)
      throw std::runtime_error(dir + "/reliability.csv: cannot open for writing");
    out << "p,q,i,j,direct,transitive,reliability,kept\n";
    for (const auto& [key, pair] : state.pairs)
      for (int i = 0; i < pair.reliability.rows(); ++i)
        for (int j = 0; j < pair.reliability.cols(); ++j) {
          const int direct = pair.assignment.x(i, j);
          const int rel = pair.reliability(i, j);
          if (direct == 0 && rel == 0) continue;  // omit the empty bulk
          out << key.first << ',' << key.second << ',' << i << ',' << j << ','
              << direct << ',' << (rel - direct) << ',' << rel << ','
              << (rel > theta ? 1 : 0) << "\n";
        }
  }
  {
    std::ofstream out(dir + "/trace.csv");
    if (!out) throw std::runtime_error(dir + "/trace.csv: cannot open for writing");
    out << "p,q,objective,objective_prev,converged,no_consistent\n";
    for (const auto& [key, pair] : state.pairs)
      out << key.first << ',' << key.second << ',' << format_double(pair.g_curr)
          << ','
          << (std::isnan(pair.g_prev_metric) ? std::string("-")
                                             : format_double(pair.g_prev_metric))
          << ',' << (pair.converged ? 1 : 0) << ',' << (pair.no_consistent ? 1 : 0)
          << "\n";
  }
  {
    std::ofstream out(dir + "/metric_trace.csv");
    if (!out)
      throw std::runtime_error(dir + "/metric_trace.csv: cannot open for writing");
    out << "pair,iter,objective,step,min_eig\n";
    for (const auto& [key, pair] : state.pairs)
      for (const TrainRecord& rec : pair.train_trace)
        out << pair_label(key) << ',' << rec.iter << ','
            << format_double(rec.objective) << ',' << format_double(rec.step)
            << ',' << format_double(rec.min_eig) << "\n";
  }
  for (const auto& [key, pair] : state.pairs)
    save_metric(pair.metric, dir + "/metric_" + std::to_string(key.first) + "_" +
                                 std::to_string(key.second) + ".ccmm");
}

// Final per-pair facts needed for the report; reproducible from the files.
struct PairFinal {
  MetricModel metric;
  BinaryMat x;           // final assignment
  BinaryMat consistent;  // final filtered matches
  double objective = 0.0;
  bool converged = false;
  bool no_consistent = false;
};

struct ReportInputs {
  int theta = 1;
  int max_iter = 10;
  std::uint64_t seed = 0;
  int pca_dim = 0;
  int iterations = 0;  // index of the last state dir
  const CameraDataset* dataset = nullptr;
  const std::map<int, ClusterSet>* clusters = nullptr;
  std::map<CameraPair, PairFinal> pairs;
};

namespace detail {

inline nlohmann::json counts_to_json(const PairCounts& c) {
  return nlohmann::json{{"tp", c.tp},
                        {"fp", c.fp},
                        {"fn", c.fn},
                        {"precision", c.precision},
                        {"recall", c.recall},
                        {"f1", c.f1}};
}

inline nlohmann::json match_eval_to_json(const MatchEvaluation& ev) {
  nlohmann::json per_pair = nlohmann::json::object();
  for (const auto& [key, c] : ev.per_pair) per_pair[pair_label(key)] = counts_to_json(c);
  return nlohmann::json{
      {"aggregate",
       {{"micro", counts_to_json(ev.micro)},
        {"macro",
         {{"precision", ev.macro_precision},
          {"recall", ev.macro_recall},
          {"f1", ev.macro_f1}}}}},
      {"per_pair", per_pair}};
}

inline nlohmann::json retrieval_to_json(const RetrievalEvaluation& ev) {
  return nlohmann::json{{"cmc", ev.cmc},
                        {"map", ev.mean_ap},
                        {"num_queries", ev.num_queries},
                        {"excluded_queries", ev.excluded_queries}};
}

}  // namespace detail

inline nlohmann::json build_report(const ReportInputs& in) {
  if (in.dataset == nullptr || in.clusters == nullptr)
    throw std::invalid_argument("build_report: missing dataset or clusters");
  const CameraDataset& ds = *in.dataset;

  nlohmann::json cameras = nlohmann::json::object();
  for (const auto& [cam, cset] : *in.clusters) {
    const auto it = ds.cameras.find(cam);
    if (it == ds.cameras.end())
      throw std::invalid_argument("build_report: camera " + std::to_string(cam) +
                                  " missing from dataset");
    cameras[std::to_string(cam)] = {{"clusters", cset.num_clusters()},
                                    {"tracklets", it->second.size()}};
  }

  nlohmann::json pairs = nlohmann::json::object();
  for (const auto& [key, pf] : in.pairs) {
    pairs[pair_label(key)] = {{"matches", pf.x.sum()},
                              {"consistent_matches", pf.consistent.sum()},
                              {"objective", pf.objective},
                              {"converged", pf.converged},
                              {"no_consistent", pf.no_consistent}};
  }

  nlohmann::json report{{"cameras", cameras},
                        {"config",
                         {{"theta", in.theta},
                          {"max_iter", in.max_iter},
                          {"seed", in.seed},
                          {"pca_dim", in.pca_dim}}},
                        {"iterations", in.iterations},
                        {"pairs", pairs}};

  if (ds.has_identities()) {
    std::map<CameraPair, BinaryMat> direct, consistent;
    for (const auto& [key, pf] : in.pairs) {
      direct[key] = pf.x;
      consistent[key] = pf.consistent;
    }
    report["label_estimation"] = {
        {"direct", detail::match_eval_to_json(evaluate_matches(direct, *in.clusters, ds))},
        {"consistent",
         detail::match_eval_to_json(evaluate_matches(consistent, *in.clusters, ds))}};

    std::vector<MetricModel> learned;
    std::vector<MetricModel> baseline;
    for (const auto& [key, pf] : in.pairs) {
      learned.push_back(pf.metric);
      MetricModel ident;
      ident.cam_p = key.first;
      ident.cam_q = key.second;
      ident.m = Mat::Identity(ds.dimension, ds.dimension);
      baseline.push_back(std::move(ident));
    }
    const std::vector<TrackletFeature> everyone = all_tracklets(ds);
    report["retrieval"] =
        detail::retrieval_to_json(evaluate_retrieval(everyone, everyone, learned));
    report["retrieval_initial"] =
        detail::retrieval_to_json(evaluate_retrieval(everyone, everyone, baseline));
  }
  return report;
}

// Serializes with sorted keys and a trailing newline; the byte layout is the
// determinism contract for report files.
inline void write_report(const nlohmann::json& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << report.dump(2) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

// ---- reading a finished run directory back ----

struct LoadedRun {
  std::map<std::string, std::string> config;
  int iterations = 0;
  std::map<CameraPair, PairFinal> pairs;
};

// Loads the final-iteration artifacts. Cluster shapes come from the caller
// (recomputed from the feature file). Missing files are reported together.
inline LoadedRun load_run_dir(const std::string& dir,
                              const std::map<int, ClusterSet>& clusters) {
  namespace fs = std::filesystem;
  LoadedRun run;

  std::vector<std::string> missing;
  if (!fs::exists(dir + "/config.txt")) missing.push_back(dir + "/config.txt");
  if (!fs::exists(dir + "/clusters.csv")) missing.push_back(dir + "/clusters.csv");
  int last = -1;
  while (fs::exists(dir + "/state/t" + std::to_string(last + 1))) ++last;
  if (last < 0) missing.push_back(dir + "/state/t0");
  if (!missing.empty()) {
    std::string msg = "run directory " + dir + " is missing artifacts:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }
  run.config = read_config_file(dir + "/config.txt");
  run.iterations = last;

  const std::string sdir = dir + "/state/t" + std::to_string(last);
  for (const std::string f :
       {"matches.csv", "reliability.csv", "trace.csv", "metric_trace.csv"})
    if (!fs::exists(sdir + "/" + f)) missing.push_back(sdir + "/" + f);
  if (!missing.empty()) {
    std::string msg = "run directory " + dir + " is missing artifacts:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  const auto shape_of = [&](const CameraPair& key) -> std::pair<int, int> {
    const auto p = clusters.find(key.first);
    const auto q = clusters.find(key.second);
    if (p == clusters.end() || q == clusters.end())
      throw std::runtime_error("run directory references unknown camera pair " +
                               pair_label(key));
    return {p->second.num_clusters(), q->second.num_clusters()};
  };

  // trace.csv enumerates every pair; seed the map from it.
  for (const auto& row : read_csv(sdir + "/trace.csv",
                                  "p,q,objective,objective_prev,converged,no_consistent")) {
    const std::string where = sdir + "/trace.csv";
    const CameraPair key{parse_int(row[0], where), parse_int(row[1], where)};
    PairFinal pf;
    pf.objective = parse_double(row[2], where);
    pf.converged = parse_int(row[4], where) != 0;
    pf.no_consistent = parse_int(row[5], where) != 0;
    const auto [np, nq] = shape_of(key);
    pf.x = BinaryMat::Zero(np, nq);
    pf.consistent = BinaryMat::Zero(np, nq);
    run.pairs[key] = std::move(pf);
  }
  for (const auto& row : read_csv(sdir + "/matches.csv", "p,q,i,j,cost")) {
    const std::string where = sdir + "/matches.csv";
    const CameraPair key{parse_int(row[0], where), parse_int(row[1], where)};
    const auto it = run.pairs.find(key);
    if (it == run.pairs.end())
      throw std::runtime_error(where + ": pair " + pair_label(key) +
                               " not present in trace.csv");
    const int i = parse_int(row[2], where);
    const int j = parse_int(row[3], where);
    if (i < 0 || i >= it->second.x.rows() || j < 0 || j >= it->second.x.cols())
      throw std::runtime_error(where + ": match index out of range for pair " +
                               pair_label(key));
    it->second.x(i, j) = 1;
  }
  for (const auto& row :
       read_csv(sdir + "/reliability.csv",
                "p,q,i,j,direct,transitive,reliability,kept")) {
    const std::string where = sdir + "/reliability.csv";
    const CameraPair key{parse_int(row[0], where), parse_int(row[1], where)};
    const auto it = run.pairs.find(key);
    if (it == run.pairs.end())
      throw std::runtime_error(where + ": pair " + pair_label(key) +
                               " not present in trace.csv");
    if (parse_int(row[7], where) != 0) {
      const int i = parse_int(row[2], where);
      const int j = parse_int(row[3], where);
      if (i < 0 || i >= it->second.consistent.rows() || j < 0 ||
          j >= it->second.consistent.cols())
        throw std::runtime_error(where + ": index out of range for pair " +
                                 pair_label(key));
      it->second.consistent(i, j) = 1;
    }
  }
  for (auto& [key, pf] : run.pairs) {
    const std::string mpath = sdir + "/metric_" + std::to_string(key.first) + "_" +
                              std::to_string(key.second) + ".ccmm";
    if (!fs::exists(mpath))
      throw std::runtime_error("run directory " + dir +
                               " is missing artifacts: " + mpath);
    pf.metric = load_metric(mpath);
    if (pf.metric.cam_p != key.first || pf.metric.cam_q != key.second)
      throw std::runtime_error(mpath + ": camera pair does not match filename");
  }
  return run;
}

}  // namespace ccm
