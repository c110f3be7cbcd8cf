// Command-line front end for the consistent cross-view matching library.
//
//   ccm generate  write a synthetic ccmf feature file
//   ccm run       cluster / match / filter / learn, writing a run directory
//   ccm cluster   run, stopped after per-camera clustering
//   ccm match     run, stopped after the first match + reliability pass
//   ccm eval      recompute the report of a finished run directory
//
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 runtime
// failure (I/O, malformed files, numerical breakdown).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccm/ccm.hpp"
#include "ccm/run_dir.hpp"

namespace {

using namespace ccm;

struct RunConfig {
  std::string config_file;
  std::string features;
  bool synthetic = false;
  SyntheticConfig syn;
  std::string out;
  std::string stage = "full";
  int theta = 1;
  int max_iter = 10;
  std::uint64_t seed = 1;
  int jobs = 1;
  int pca_dim = 0;
  double convergence_tol = 1e-9;
  int opt_max_iter = 200;
  double opt_tolerance = 1e-6;
  double opt_step = 1.0;
  std::string loss_labels = "signed";
};

void add_synthetic_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--identities", cfg.syn.num_identities,
                  "synthetic: number of identities");
  cmd->add_option("--cameras", cfg.syn.num_cameras, "synthetic: number of cameras");
  cmd->add_option("--dim", cfg.syn.dim, "synthetic: feature dimension");
  cmd->add_option("--presence", cfg.syn.presence_prob,
                  "synthetic: probability an identity appears in a camera");
  cmd->add_option("--tracklets-min", cfg.syn.tracklets_min,
                  "synthetic: min tracklets per (camera, identity)");
  cmd->add_option("--tracklets-max", cfg.syn.tracklets_max,
                  "synthetic: max tracklets per (camera, identity)");
  cmd->add_option("--distortion", cfg.syn.camera_distortion_scale,
                  "synthetic: per-camera affine distortion scale");
  cmd->add_option("--noise", cfg.syn.noise_sigma,
                  "synthetic: per-coordinate feature noise sigma");
}

// CLI11 only processes set_config on the top-level application, never on a
// subcommand, so subcommands take --config as a plain option and the file is
// merged after command-line parsing (see apply_config_file).
void add_run_options(CLI::App* cmd, RunConfig& cfg, bool with_stage) {
  cmd->add_option("--config", cfg.config_file,
                  "flat key = value configuration file");
  cmd->allow_config_extras(false);
  cmd->add_option("--features", cfg.features, "input ccmf feature file");
  cmd->add_flag("--synthetic", cfg.synthetic,
                "generate the input instead of reading a file");
  cmd->add_option("--out", cfg.out, "run directory to create")->required();
  cmd->add_option("--theta", cfg.theta, "reliability threshold (keep > theta)");
  cmd->add_option("--max-iter", cfg.max_iter, "maximum alternation iterations");
  cmd->add_option("--seed", cfg.seed, "seed for synthetic generation");
  cmd->add_option("--jobs", cfg.jobs, "worker threads for independent slots");
  cmd->add_option("--pca-dim", cfg.pca_dim, "PCA target dimension (0 = off)");
  cmd->add_option("--convergence-tol", cfg.convergence_tol,
                  "minimum per-pair objective improvement");
  cmd->add_option("--opt-max-iter", cfg.opt_max_iter,
                  "metric learning: max optimizer iterations");
  cmd->add_option("--opt-tolerance", cfg.opt_tolerance,
                  "metric learning: relative objective tolerance");
  cmd->add_option("--opt-step", cfg.opt_step, "metric learning: initial step size");
  cmd->add_option("--loss-labels", cfg.loss_labels,
                  "loss label convention: signed | binary")
      ->check(CLI::IsMember({"signed", "binary"}));
  if (with_stage)
    cmd->add_option("--stage", cfg.stage, "stop after: cluster | match | full")
        ->check(CLI::IsMember({"cluster", "match", "full"}));
  add_synthetic_options(cmd, cfg);
}

// Merge a flat key = value file into an already-parsed subcommand. Feeding it
// through the subcommand's own stream parser reuses the normal option
// conversions and validators, keeps values given on the command line (config
// entries only fill options that are still empty), and rejects unknown keys.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  cmd.parse_from_stream(in);
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.max_iter = cfg.max_iter;
  p.theta = cfg.theta;
  p.seed = cfg.seed;
  p.jobs = cfg.jobs;
  p.convergence_tol = cfg.convergence_tol;
  p.optimizer.max_iterations = cfg.opt_max_iter;
  p.optimizer.objective_tolerance = cfg.opt_tolerance;
  p.optimizer.initial_step = cfg.opt_step;
  p.optimizer.label_mode = cfg.loss_labels == "binary" ? LossLabelMode::kBinary
                                                       : LossLabelMode::kSigned;
  return p;
}

std::map<std::string, std::string> effective_config(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["stage"] = cfg.stage;
  m["theta"] = std::to_string(cfg.theta);
  m["max-iter"] = std::to_string(cfg.max_iter);
  m["seed"] = std::to_string(cfg.seed);
  m["jobs"] = std::to_string(cfg.jobs);
  m["pca-dim"] = std::to_string(cfg.pca_dim);
  m["convergence-tol"] = format_double(cfg.convergence_tol);
  m["opt-max-iter"] = std::to_string(cfg.opt_max_iter);
  m["opt-tolerance"] = format_double(cfg.opt_tolerance);
  m["opt-step"] = format_double(cfg.opt_step);
  m["loss-labels"] = cfg.loss_labels;
  if (cfg.synthetic) {
    m["synthetic"] = "true";
    m["identities"] = std::to_string(cfg.syn.num_identities);
    m["cameras"] = std::to_string(cfg.syn.num_cameras);
    m["dim"] = std::to_string(cfg.syn.dim);
    m["presence"] = format_double(cfg.syn.presence_prob);
    m["tracklets-min"] = std::to_string(cfg.syn.tracklets_min);
    m["tracklets-max"] = std::to_string(cfg.syn.tracklets_max);
    m["distortion"] = format_double(cfg.syn.camera_distortion_scale);
    m["noise"] = format_double(cfg.syn.noise_sigma);
  } else {
    m["features"] = cfg.features;
  }
  return m;
}

void print_census(const CameraDataset& ds) {
  for (const auto& [cam, list] : ds.cameras) {
    std::set<std::string> idents;
    for (const auto& t : list)
      if (t.identity) idents.insert(*t.identity);
    std::cout << "camera " << cam << ": " << idents.size() << " identities, "
              << list.size() << " tracklets\n";
  }
}

void cmd_generate(const RunConfig& cfg, const std::string& out_file) {
  RunConfig c = cfg;
  c.syn.seed = cfg.seed;
  const CameraDataset ds = generate_synthetic(c.syn);
  save_features(ds, out_file);
  print_census(ds);
  std::cout << "wrote " << out_file << "\n";
}

void cmd_run(const RunConfig& cfg) {
  if (cfg.synthetic == !cfg.features.empty())
    throw std::invalid_argument(
        "exactly one of --features and --synthetic must be given");

  RunConfig c = cfg;
  c.syn.seed = cfg.seed;
  const CameraDataset raw =
      c.synthetic ? generate_synthetic(c.syn) : load_features(c.features);
  const CameraDataset ds = preprocess_features(raw, c.pca_dim);

  namespace fs = std::filesystem;
  fs::create_directories(c.out);
  write_config_file(c.out + "/config.txt", effective_config(c));
  if (c.synthetic) save_features(raw, c.out + "/features.ccmf");

  const PipelineConfig pcfg = pipeline_config(c);
  PipelineState st = initialize_pipeline(ds, pcfg);
  write_clusters_csv(c.out + "/clusters.csv", st.clusters, ds);
  if (c.stage == "cluster") {
    std::cout << "wrote " << c.out << " (stage cluster)\n";
    return;
  }
  if (c.stage == "full") continue_pipeline(st, pcfg);
  for (const IterationState& state : st.history)
    write_state_dir(c.out + "/state/t" + std::to_string(state.t), state, c.theta);
  if (c.stage == "match") {
    std::cout << "wrote " << c.out << " (stage match)\n";
    return;
  }

  ReportInputs in;
  in.theta = c.theta;
  in.max_iter = c.max_iter;
  in.seed = c.seed;
  in.pca_dim = c.pca_dim;
  in.iterations = st.final_state().t;
  in.dataset = &ds;
  in.clusters = &st.clusters;
  for (const auto& [key, pair] : st.final_state().pairs) {
    PairFinal pf;
    pf.metric = pair.metric;
    pf.x = pair.assignment.x;
    pf.consistent = pair.consistent;
    pf.objective = pair.g_curr;
    pf.converged = pair.converged;
    pf.no_consistent = pair.no_consistent;
    in.pairs[key] = std::move(pf);
  }
  write_report(build_report(in), c.out + "/report.json");
  std::cout << "wrote " << c.out << " (iterations: " << in.iterations << ")\n";
}

void cmd_eval(const std::string& run_dir, const std::string& features_flag,
              bool identity_metrics, const std::string& out_flag) {
  namespace fs = std::filesystem;
  const auto config = read_config_file(run_dir + "/config.txt");
  const auto need = [&](const std::string& key) -> std::string {
    const auto it = config.find(key);
    if (it == config.end())
      throw std::runtime_error(run_dir + "/config.txt: missing key '" + key + "'");
    return it->second;
  };

  std::string features = features_flag;
  if (features.empty() && fs::exists(run_dir + "/features.ccmf"))
    features = run_dir + "/features.ccmf";
  if (features.empty() && config.count("features")) features = need("features");
  if (features.empty())
    throw std::invalid_argument(
        "no feature file: pass --features or evaluate a synthetic run");

  const std::string where = run_dir + "/config.txt";
  const int pca_dim = parse_int(need("pca-dim"), where);
  const int theta = parse_int(need("theta"), where);
  const int max_iter = parse_int(need("max-iter"), where);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(std::stoull(need("seed")));

  const CameraDataset raw = load_features(features);
  const CameraDataset ds = preprocess_features(raw, pca_dim);

  std::map<int, ClusterSet> clusters;
  for (const auto& [cam, list] : ds.cameras) {
    std::vector<Vec> feats;
    feats.reserve(list.size());
    for (const auto& t : list) feats.push_back(t.feature);
    clusters[cam] = cluster_camera(feats, cam);
  }

  LoadedRun run = load_run_dir(run_dir, clusters);

  ReportInputs in;
  in.theta = theta;
  in.max_iter = max_iter;
  in.seed = seed;
  in.pca_dim = pca_dim;
  in.iterations = run.iterations;
  in.dataset = &ds;
  in.clusters = &clusters;
  in.pairs = std::move(run.pairs);
  if (identity_metrics)
    for (auto& [key, pf] : in.pairs)
      pf.metric.m = Mat::Identity(ds.dimension, ds.dimension);

  const std::string out_file =
      out_flag.empty() ? run_dir + "/report.eval.json" : out_flag;
  write_report(build_report(in), out_file);
  std::cout << "wrote " << out_file << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consistent cross-view matching of tracklets across a camera network"};
  app.require_subcommand(1);

  RunConfig gen_cfg;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("generate", "write a synthetic ccmf feature file");
  gen->add_option("--config", gen_cfg.config_file,
                  "flat key = value configuration file");
  gen->allow_config_extras(false);
  gen->add_option("--out", gen_out, "output ccmf file")->required();
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  add_synthetic_options(gen, gen_cfg);

  RunConfig run_cfg;
  CLI::App* run = app.add_subcommand("run", "run the full pipeline into a directory");
  add_run_options(run, run_cfg, true);

  RunConfig cluster_cfg;
  cluster_cfg.stage = "cluster";
  CLI::App* cluster =
      app.add_subcommand("cluster", "cluster each camera, write clusters.csv");
  add_run_options(cluster, cluster_cfg, false);

  RunConfig match_cfg;
  match_cfg.stage = "match";
  CLI::App* match = app.add_subcommand(
      "match", "first match + reliability pass, no metric learning");
  add_run_options(match, match_cfg, false);

  std::string eval_run, eval_features, eval_out;
  bool eval_identity = false;
  CLI::App* eval = app.add_subcommand("eval", "recompute the report of a run directory");
  eval->add_option("--run", eval_run, "run directory to evaluate")->required();
  eval->add_option("--features", eval_features,
                   "feature file (default: the run's own)");
  eval->add_flag("--identity-metrics", eval_identity,
                 "score retrieval with identity metrics instead of learned ones");
  eval->add_option("--out", eval_out, "report path (default: <run>/report.eval.json)");

  try {
    app.parse(argc, argv);
    if (*gen) {
      apply_config_file(*gen, gen_cfg.config_file);
      cmd_generate(gen_cfg, gen_out);
    } else if (*run) {
      apply_config_file(*run, run_cfg.config_file);
      cmd_run(run_cfg);
    } else if (*cluster) {
      apply_config_file(*cluster, cluster_cfg.config_file);
      cmd_run(cluster_cfg);
    } else if (*match) {
      apply_config_file(*match, match_cfg.config_file);
      cmd_run(match_cfg);
    } else if (*eval) {
      cmd_eval(eval_run, eval_features, eval_identity, eval_out);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
