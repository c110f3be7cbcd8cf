#pragma once

// Tracklet feature containers, preprocessing (mean-pool, PCA, l2-normalize),
// a seeded synthetic camera-network generator, and the ccmf text format.
//
// Preprocessing order is: mean-pool frames -> optional PCA -> l2-normalize.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccm/core.hpp"

namespace ccm {

struct TrackletFeature {
  std::string tracklet_id;
  int camera_id = 0;
  Vec feature;
  std::optional<std::string> identity;  // ground truth when available

  bool operator==(const TrackletFeature& o) const {
    return tracklet_id == o.tracklet_id && camera_id == o.camera_id &&
           identity == o.identity && feature.size() == o.feature.size() &&
           feature == o.feature;
  }
};

// Tracklets grouped by camera id; map order fixes the camera iteration order.
struct CameraDataset {
  std::map<int, std::vector<TrackletFeature>> cameras;
  int dimension = 0;

  std::size_t total_tracklets() const {
    std::size_t n = 0;
    for (const auto& [id, list] : cameras) n += list.size();
    return n;
  }

  bool has_identities() const {
    for (const auto& [id, list] : cameras)
      for (const auto& t : list)
        if (!t.identity) return false;
    return total_tracklets() > 0;
  }

  bool operator==(const CameraDataset& o) const {
    return dimension == o.dimension && cameras == o.cameras;
  }
};

// Flattened view in deterministic order (camera id asc, then file order).
inline std::vector<TrackletFeature> all_tracklets(const CameraDataset& ds) {
  std::vector<TrackletFeature> out;
  out.reserve(ds.total_tracklets());
  for (const auto& [id, list] : ds.cameras)
    for (const auto& t : list) out.push_back(t);
  return out;
}

inline Vec mean_pool_tracklet(const std::vector<Vec>& frames) {
  if (frames.empty())
    throw std::invalid_argument("mean_pool_tracklet: no frames");
  Vec sum = frames[0];
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].size() != sum.size())
      throw std::invalid_argument("mean_pool_tracklet: frame dimension mismatch");
    sum += frames[i];
  }
  return sum / static_cast<double>(frames.size());
}

inline Vec l2_normalize(const Vec& v) {
  const double n = v.norm();
  if (!(n > 1e-12))
    throw std::invalid_argument("l2_normalize: vector norm is degenerate");
  return v / n;
}

// Principal-component projection fitted on row-major data (one row per sample).
struct PcaModel {
  Vec mean;         // d
  Mat components;   // target_dim x d, rows orthonormal, by descending variance
  Vec eigenvalues;  // captured variances, descending

  Vec project(const Vec& x) const {
    if (x.size() != mean.size())
      throw std::invalid_argument("PcaModel::project: dimension mismatch");
    return components * (x - mean);
  }

  Vec reconstruct(const Vec& y) const {
    if (y.size() != components.rows())
      throw std::invalid_argument("PcaModel::reconstruct: dimension mismatch");
    return components.transpose() * y + mean;
  }
};

struct PcaResult {
  Mat reduced;  // n x target_dim
  PcaModel model;
};

// Population covariance (1/N) convention throughout.
inline PcaResult pca_reduce(const Mat& samples, int target_dim) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n < 1) throw std::invalid_argument("pca_reduce: no samples");
  if (target_dim < 1 || target_dim > std::min(n, d))
    throw std::invalid_argument("pca_reduce: target dimension out of range");

  Vec mean = samples.colwise().mean();
  Mat centered = samples.rowwise() - mean.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("pca_reduce: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top target_dim, descending.
  PcaModel model;
  model.mean = mean;
  model.components.resize(target_dim, d);
  model.eigenvalues.resize(target_dim);
  for (int k = 0; k < target_dim; ++k) {
    const int src = d - 1 - k;
    Vec comp = es.eigenvectors().col(src);
    // Deterministic sign: largest-magnitude coordinate is positive.
    int arg = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
    if (comp[arg] < 0) comp = -comp;
    model.components.row(k) = comp.transpose();
    model.eigenvalues[k] = std::max(0.0, es.eigenvalues()[src]);
  }

  PcaResult out;
  out.model = model;
  out.reduced = centered * model.components.transpose();
  return out;
}

// Applies optional global PCA (fit over all cameras) then l2-normalizes.
// pca_dim == 0 disables the projection.
inline CameraDataset preprocess_features(const CameraDataset& ds, int pca_dim) {
  CameraDataset out;
  if (pca_dim > 0) {
    const std::size_t n = ds.total_tracklets();
    if (n == 0) throw std::invalid_argument("preprocess_features: empty dataset");
    Mat samples(static_cast<int>(n), ds.dimension);
    int row = 0;
    for (const auto& [cam, list] : ds.cameras)
      for (const auto& t : list) samples.row(row++) = t.feature.transpose();
    PcaResult pca = pca_reduce(samples, pca_dim);
    out.dimension = pca_dim;
    row = 0;
    for (const auto& [cam, list] : ds.cameras) {
      auto& dst = out.cameras[cam];
      dst.reserve(list.size());
      for (const auto& t : list) {
        TrackletFeature r = t;
        r.feature = l2_normalize(pca.reduced.row(row++).transpose());
        dst.push_back(std::move(r));
      }
    }
  } else {
    out.dimension = ds.dimension;
    for (const auto& [cam, list] : ds.cameras) {
      auto& dst = out.cameras[cam];
      dst.reserve(list.size());
      for (const auto& t : list) {
        TrackletFeature r = t;
        r.feature = l2_normalize(t.feature);
        dst.push_back(std::move(r));
      }
    }
  }
  return out;
}

namespace detail {

// Deterministic draw helpers over mt19937_64. Box-Muller always consumes
// exactly two uniforms per normal so the draw sequence is easy to reproduce.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const int span = hi - lo + 1;
    int k = static_cast<int>(uniform01() * span);
    if (k >= span) k = span - 1;
    return lo + k;
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace detail

struct SyntheticConfig {
  int num_identities = 20;
  int num_cameras = 4;
  int dim = 16;
  double presence_prob = 1.0;       // chance an identity appears in a camera
  int tracklets_min = 2;            // tracklets per (camera, identity) presence
  int tracklets_max = 3;
  double camera_distortion_scale = 0.0;  // strength of per-camera affine map
  double noise_sigma = 0.0;              // per-coordinate Gaussian noise
  std::uint64_t seed = 1;
};

// Seeded synthetic camera network. Each identity is a unit-norm prototype;
// each camera applies its own affine distortion x -> (I + s·G)x + s·b; each
// tracklet adds Gaussian noise and is l2-normalized. Draw order: prototypes,
// then camera maps, then per camera / per identity presence, count, noise.
inline CameraDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.num_cameras < 3)
    throw std::invalid_argument(
        "generate_synthetic: a camera network needs at least 3 cameras");
  if (cfg.num_identities < 1)
    throw std::invalid_argument("generate_synthetic: need at least 1 identity");
  if (cfg.dim < 1)
    throw std::invalid_argument("generate_synthetic: dim must be positive");
  if (!(cfg.presence_prob > 0.0) || cfg.presence_prob > 1.0)
    throw std::invalid_argument("generate_synthetic: presence_prob must be in (0, 1]");
  if (cfg.tracklets_min < 1 || cfg.tracklets_max < cfg.tracklets_min)
    throw std::invalid_argument("generate_synthetic: bad tracklet count range");
  if (cfg.noise_sigma < 0.0 || cfg.camera_distortion_scale < 0.0)
    throw std::invalid_argument("generate_synthetic: scales must be non-negative");

  detail::Rng rng(cfg.seed);
  const int d = cfg.dim;

  std::vector<Vec> prototypes(static_cast<std::size_t>(cfg.num_identities));
  for (auto& p : prototypes) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    p = l2_normalize(v);
  }

  const double s = cfg.camera_distortion_scale / std::sqrt(static_cast<double>(d));
  std::vector<Mat> lin(static_cast<std::size_t>(cfg.num_cameras));
  std::vector<Vec> offset(static_cast<std::size_t>(cfg.num_cameras));
  for (int c = 0; c < cfg.num_cameras; ++c) {
    Mat g(d, d);
    for (int r = 0; r < d; ++r)
      for (int col = 0; col < d; ++col) g(r, col) = rng.normal();
    lin[static_cast<std::size_t>(c)] = Mat::Identity(d, d) + s * g;
    Vec b(d);
    for (int i = 0; i < d; ++i) b[i] = rng.normal();
    offset[static_cast<std::size_t>(c)] = s * b;
  }

  CameraDataset ds;
  ds.dimension = d;
  for (int c = 0; c < cfg.num_cameras; ++c) {
    std::vector<TrackletFeature> cam;
    for (int k = 0; k < cfg.num_identities; ++k) {
      if (!rng.bernoulli(cfg.presence_prob)) continue;
      const int count = rng.uniform_int(cfg.tracklets_min, cfg.tracklets_max);
      for (int t = 0; t < count; ++t) {
        Vec v = lin[static_cast<std::size_t>(c)] * prototypes[static_cast<std::size_t>(k)] +
                offset[static_cast<std::size_t>(c)];
        for (int i = 0; i < d; ++i) v[i] += cfg.noise_sigma * rng.normal();
        TrackletFeature tf;
        tf.tracklet_id = "c" + std::to_string(c) + "_p" + std::to_string(k) +
                         "_t" + std::to_string(t);
        tf.camera_id = c;
        tf.identity = "id" + std::to_string(k);
        tf.feature = l2_normalize(v);
        cam.push_back(std::move(tf));
      }
    }
    if (!cam.empty()) ds.cameras[c] = std::move(cam);
  }
  return ds;
}

// ---- ccmf feature file format ----
// line 1:  ccmf 1 <dim>
// rows:    tracklet_id,camera_id,identity_or_-,v1,...,vdim
// '#' starts a comment line; blank lines are skipped.

inline void save_features(const CameraDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "ccmf 1 " << ds.dimension << "\n";
  for (const auto& [cam, list] : ds.cameras) {
    for (const auto& t : list) {
      if (t.tracklet_id.empty() || t.tracklet_id.find(',') != std::string::npos)
        throw std::runtime_error("save_features: tracklet id '" + t.tracklet_id +
                                 "' is empty or contains a comma");
      if (t.identity && (t.identity->empty() || t.identity->find(',') != std::string::npos))
        throw std::runtime_error("save_features: identity '" + *t.identity +
                                 "' is empty or contains a comma");
      if (t.feature.size() != ds.dimension)
        throw std::runtime_error("save_features: tracklet '" + t.tracklet_id +
                                 "' has wrong dimension");
      out << t.tracklet_id << ',' << t.camera_id << ','
          << (t.identity ? *t.identity : "-");
      for (int i = 0; i < t.feature.size(); ++i)
        out << ',' << format_double(t.feature[i]);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline CameraDataset load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ":1: missing header");
  {
    std::istringstream hs(trim(line));
    std::string magic;
    int version = 0, dim = 0;
    if (!(hs >> magic >> version >> dim) || magic != "ccmf")
      throw std::runtime_error(path + ":1: expected header 'ccmf 1 <dim>'");
    std::string rest;
    if (hs >> rest)
      throw std::runtime_error(path + ":1: trailing tokens in header");
    if (version != 1)
      throw std::runtime_error(path + ":1: unsupported ccmf version " +
                               std::to_string(version));
    if (dim < 1) throw std::runtime_error(path + ":1: dimension must be positive");
    CameraDataset ds;
    ds.dimension = dim;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string where = path + ":" + std::to_string(lineno);
      const std::string row = trim(line);
      if (row.empty() || row[0] == '#') continue;
      const std::vector<std::string> fields = split(row, ',');
      if (static_cast<int>(fields.size()) != 3 + dim)
        throw std::runtime_error(where + ": expected " + std::to_string(3 + dim) +
                                 " fields, got " + std::to_string(fields.size()));
      TrackletFeature t;
      t.tracklet_id = trim(fields[0]);
      if (t.tracklet_id.empty())
        throw std::runtime_error(where + ": empty tracklet id");
      if (!seen.insert(t.tracklet_id).second)
        throw std::runtime_error(where + ": duplicate tracklet id '" +
                                 t.tracklet_id + "'");
      t.camera_id = parse_int(fields[1], where);
      if (t.camera_id < 0)
        throw std::runtime_error(where + ": camera id must be non-negative");
      const std::string ident = trim(fields[2]);
      if (ident != "-") t.identity = ident;
      t.feature.resize(dim);
      for (int i = 0; i < dim; ++i)
        t.feature[i] = parse_double(fields[static_cast<std::size_t>(3 + i)], where);
      ds.cameras[t.camera_id].push_back(std::move(t));
    }
    return ds;
  }
}

}  // namespace ccm
