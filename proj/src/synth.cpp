#include "nip/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "nip/rng.hpp"

namespace nip {

void SynthSpec::validate() const {
  if (n_clusters < 1 || items_per_cluster < 1)
    throw ValidationError("synth spec needs at least one cluster and item");
  if (shape.elements() == 0)
    throw ValidationError("synth orbit shape has empty dimensions");
  if (noise < 0.0) throw ValidationError("noise must be >= 0");
}

std::string synth_item_id(uint32_t cluster, uint32_t item) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%04u_i%02u", cluster, item);
  return std::string(buf);
}

namespace {

// Cluster centers are rectified Gaussians scaled by a per-channel gain, so
// each cluster activates its own subset of channels the way selective CNN
// filters do. Without the gains, pooling would concentrate every channel
// around the same value and leave nothing for sign-based hashing to separate.
std::vector<float> synth_center(const SynthSpec& spec, uint32_t cluster) {
  std::mt19937_64 rng =
      make_rng(spec.seed, "synth-center-" + std::to_string(cluster));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> gain(spec.shape.channels);
  for (double& g : gain) g = std::max(0.0, gauss(rng));
  const uint64_t cell = static_cast<uint64_t>(spec.shape.height) * spec.shape.width;
  std::vector<float> center(spec.shape.elements());
  for (uint64_t i = 0; i < center.size(); ++i) {
    uint32_t channel = static_cast<uint32_t>((i / cell) % spec.shape.channels);
    center[i] =
        static_cast<float>(gain[channel] * std::max(0.0, gauss(rng)));
  }
  return center;
}

}  // namespace

OrbitTensor synth_orbit(const SynthSpec& spec, uint32_t cluster, uint32_t item) {
  spec.validate();
  if (cluster >= spec.n_clusters || item >= spec.items_per_cluster)
    throw ValidationError("cluster or item index out of range");

  std::vector<float> center = synth_center(spec, cluster);
  OrbitTensor t;
  t.image_id = synth_item_id(cluster, item);
  t.shape = spec.shape;
  t.data.resize(center.size());

  const uint64_t per_rot = spec.shape.elements() / spec.shape.n_rot;
  const uint32_t shift =
      spec.rotate_items ? item % spec.shape.n_rot : 0;
  for (uint32_t r = 0; r < spec.shape.n_rot; ++r) {
    uint32_t src = (r + shift) % spec.shape.n_rot;
    std::copy(center.begin() + static_cast<ptrdiff_t>(src * per_rot),
              center.begin() + static_cast<ptrdiff_t>((src + 1) * per_rot),
              t.data.begin() + static_cast<ptrdiff_t>(r * per_rot));
  }

  if (spec.noise > 0.0) {
    std::mt19937_64 rng = make_rng(
        spec.seed, "synth-item-" + std::to_string(cluster) + "-" +
                       std::to_string(item));
    std::normal_distribution<double> gauss(0.0, spec.noise);
    for (float& v : t.data)
      v = static_cast<float>(
          std::max(0.0, static_cast<double>(v) + gauss(rng)));
  }
  return t;
}

GroundTruth synth_ground_truth(const SynthSpec& spec) {
  GroundTruth gt;
  for (uint32_t k = 0; k < spec.n_clusters; ++k) {
    std::vector<std::string> members;
    for (uint32_t j = 0; j < spec.items_per_cluster; ++j)
      members.push_back(synth_item_id(k, j));
    for (uint32_t j = 0; j < spec.items_per_cluster; ++j)
      gt.queries.push_back({members[j], members});
  }
  return gt;
}

void generate_synth_store(const SynthSpec& spec, const std::string& store_path,
                          const std::string& gt_path, Metadata meta) {
  spec.validate();
  std::vector<std::string> ids;
  for (uint32_t k = 0; k < spec.n_clusters; ++k)
    for (uint32_t j = 0; j < spec.items_per_cluster; ++j)
      ids.push_back(synth_item_id(k, j));

  meta.set("generator", "synth");
  meta.set("n_clusters", static_cast<uint64_t>(spec.n_clusters));
  meta.set("items_per_cluster", static_cast<uint64_t>(spec.items_per_cluster));
  meta.set("noise", spec.noise);
  meta.set("seed", spec.seed);

  write_store(store_path, spec.shape, ids,
              [&](const std::string& id, std::vector<float>& out) {
                unsigned cluster = 0, item = 0;
                if (std::sscanf(id.c_str(), "c%u_i%u", &cluster, &item) != 2)
                  throw ValidationError("bad synth id '" + id + "'");
                out = synth_orbit(spec, cluster, item).data;
              },
              meta);
  write_ground_truth(synth_ground_truth(spec), gt_path);
}

DescriptorTable synth_descriptors(uint32_t n_items, uint32_t dim,
                                  uint32_t n_clusters, double noise,
                                  uint64_t seed, bool l2norm) {
  if (n_items < 1 || dim < 1 || n_clusters < 1)
    throw ValidationError("synth descriptor spec must be positive");
  std::vector<std::vector<double>> centers(n_clusters);
  for (uint32_t k = 0; k < n_clusters; ++k) {
    std::mt19937_64 rng = make_rng(seed, "synthdesc-center-" + std::to_string(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    centers[k].resize(dim);
    for (double& v : centers[k]) v = std::max(0.0, gauss(rng));
  }
  DescriptorTable table(dim);
  std::mt19937_64 rng = make_rng(seed, "synthdesc-items");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> row(dim);
  for (uint32_t i = 0; i < n_items; ++i) {
    uint32_t k = i % n_clusters;
    double sq = 0.0;
    for (uint32_t j = 0; j < dim; ++j) {
      double v = std::max(0.0, centers[k][j] + noise * gauss(rng));
      row[j] = static_cast<float>(v);
      sq += v * v;
    }
    if (l2norm && sq > 0.0) {
      double inv = 1.0 / std::sqrt(sq);
      for (float& v : row) v = static_cast<float>(v * inv);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "d%06u", i);
    table.add(buf, row);
  }
  return table;
}

}  // namespace nip
