#pragma once

// Synthetic clustered datasets for tests and benchmarks. Items inside a
// cluster are noisy cyclic rotations of a shared center orbit, so sequences
// that pool the rotation axis see them as near-identical; ground truth marks
// cluster mates (including the item itself) relevant.

#include <cstdint>

#include "nip/descriptor.hpp"
#include "nip/orbit_store.hpp"

namespace nip {

struct SynthSpec {
  uint32_t n_clusters = 10;
  uint32_t items_per_cluster = 4;
  OrbitShape shape;
  double noise = 0.0;  // stddev of additive perturbation, clamped at 0
  uint64_t seed = 0;
  bool rotate_items = true;  // item k is the center shifted by k rotations

  void validate() const;
};

// id format: c<cluster>_i<item>, zero-padded
std::string synth_item_id(uint32_t cluster, uint32_t item);

OrbitTensor synth_orbit(const SynthSpec& spec, uint32_t cluster, uint32_t item);

GroundTruth synth_ground_truth(const SynthSpec& spec);

void generate_synth_store(const SynthSpec& spec, const std::string& store_path,
                          const std::string& gt_path, Metadata meta = {});

// Clustered descriptors for hashing experiments: per-cluster centers with
// additive Gaussian noise, rectified at 0 and optionally L2-normalized.
DescriptorTable synth_descriptors(uint32_t n_items, uint32_t dim,
                                  uint32_t n_clusters, double noise,
                                  uint64_t seed, bool l2norm = true);

}  // namespace nip
