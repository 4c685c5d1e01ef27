#pragma once

// Unsupervised hashing baselines for comparison runs: random-projection sign
// hashing (LSH), PCA-projection sign hashing, and ITQ (PCA followed by a
// learned orthogonal rotation minimizing sign-quantization loss).

#include <Eigen/Dense>

#include "nip/descriptor.hpp"
#include "nip/postproc.hpp"

namespace nip {

struct LshModel {
  Eigen::MatrixXd projections;  // n_bits x dim, rows i.i.d. standard normal
  uint64_t seed = 0;

  uint32_t dim() const { return static_cast<uint32_t>(projections.cols()); }
  uint32_t n_bits() const { return static_cast<uint32_t>(projections.rows()); }
};

LshModel lsh_fit(uint32_t dim, uint32_t n_bits, uint64_t seed);
// bit j = 1 iff projections_j . d > 0
BinaryHash lsh_hash(const LshModel& m, const Descriptor& d);

// PCA basis without whitening scale; bit j = sign of the j-th centered
// principal projection.
PcaModel pcahash_fit(const Eigen::MatrixXd& X, uint32_t n_bits);
BinaryHash pcahash_hash(const PcaModel& m, const Descriptor& d);

struct ItqModel {
  PcaModel pca;               // whiten = false
  Eigen::MatrixXd rotation;   // n_bits x n_bits orthogonal
  uint32_t iterations = 0;
  std::vector<double> loss_history;  // quantization loss per iteration

  uint32_t n_bits() const { return static_cast<uint32_t>(rotation.rows()); }
};

// Alternating minimization of ||B - V R||_F^2: fix R -> B = sign(V R);
// fix B -> R by orthogonal Procrustes. Deterministic from seed.
ItqModel itq_fit(const Eigen::MatrixXd& X, uint32_t n_bits,
                 uint32_t iterations, uint64_t seed);
BinaryHash itq_hash(const ItqModel& m, const Descriptor& d);

}  // namespace nip
