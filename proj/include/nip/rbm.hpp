#pragma once

// Hashing RBM: binary latent units over real-valued inputs, trained with
// contrastive divergence plus a batch-level cross-entropy regularizer that
// pulls hidden activations toward uniform-random targets, balancing bit
// usage. Hashes are the latent activations thresholded at 0.5, i.e. the sign
// of the pre-activation.

#include <Eigen/Dense>

#include <random>
#include <utility>

#include "nip/binio.hpp"
#include "nip/descriptor.hpp"

namespace nip {

struct RbmParams {
  Eigen::MatrixXd W;  // J x I (hidden x visible)
  Eigen::VectorXd b;  // hidden bias, J
  Eigen::VectorXd c;  // visible bias, I

  uint32_t visible() const { return static_cast<uint32_t>(W.cols()); }
  uint32_t hidden() const { return static_cast<uint32_t>(W.rows()); }
};

struct TrainConfig {
  double learning_rate = 0.05;
  uint32_t cd_k = 1;
  uint32_t batch_size = 100;
  uint32_t epochs = 30;
  double lambda = 0.1;  // regularization constant
  double momentum = 0.5;
  double weight_decay = 1e-4;
  uint64_t seed = 0;

  void validate() const;
  Metadata to_metadata() const;
  static TrainConfig from_metadata(const Metadata& m);
};

// W ~ N(0, 0.01^2), biases zero; deterministic given seed.
RbmParams init_rbm(uint32_t n_visible, uint32_t n_hidden, uint64_t seed);

// P(z_j|x) = sigmoid(w_j.x + b_j); outputs strictly inside (0,1)
Eigen::VectorXd hidden_probs(const RbmParams& p, const Eigen::VectorXd& x);
// P(x_i|z) = sigmoid(w_i^T.z + c_i)
Eigen::VectorXd visible_probs(const RbmParams& p, const Eigen::VectorXd& z);
// batch variants, one sample per row
Eigen::MatrixXd hidden_probs_batch(const RbmParams& p, const Eigen::MatrixXd& X);
Eigen::MatrixXd visible_probs_batch(const RbmParams& p, const Eigen::MatrixXd& Z);

// i.i.d. U(0,1) targets, entries strictly inside (0,1); row-major fill order
Eigen::MatrixXd sample_targets(uint32_t batch_size, uint32_t n_hidden,
                               std::mt19937_64& rng);

// h(B) = sum_{alpha,j} t log z + (1-t) log(1-z), z clamped to
// [1e-7, 1-1e-7]; maximized at z = t.
double regularizer(const Eigen::MatrixXd& z_probs, const Eigen::MatrixXd& targets);

struct CdState {
  Eigen::MatrixXd vel_w;
  Eigen::VectorXd vel_b;
  Eigen::VectorXd vel_c;
  static CdState zeros(uint32_t n_visible, uint32_t n_hidden);
};

struct BatchStats {
  double recon_error = 0.0;  // mean squared reconstruction error
  double reg_value = 0.0;    // h(B) for the batch
  Eigen::VectorXd bit_means;  // data-phase hidden activation means
};

// One CD-k step with momentum and weight decay. The Gibbs chain samples
// hidden states (Bernoulli) and uses mean-field visible probabilities; the
// regularizer gradient flows through the data-phase activations:
// d h/d W_j = sum_alpha (t - z) x_alpha, d h/d b_j = sum_alpha (t - z).
// Targets are resampled every call regardless of lambda so runs with
// different lambda consume identical random streams.
BatchStats cd_update(RbmParams& p, CdState& state, const Eigen::MatrixXd& batch,
                     const TrainConfig& cfg, std::mt19937_64& rng);

struct RbmGradients {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

// Exact gradient of sum_alpha log P(x_alpha) under the RBM, by enumerating
// the visible state space (hidden units marginalize analytically). Test
// oracle; requires n_visible <= 12 and n_hidden <= 12.
RbmGradients exact_ll_grad(const RbmParams& p, const Eigen::MatrixXd& batch);
// the log-likelihood itself, for finite-difference checks
double exact_ll(const RbmParams& p, const Eigen::MatrixXd& batch);

struct EpochStats {
  double recon_error = 0.0;
  double regularizer = 0.0;
  Eigen::VectorXd bit_means;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// epochs x ceil(N/batch) cd_update calls over seeded shuffles of the rows
std::pair<RbmParams, TrainHistory> train_rbm(RbmParams p,
                                             const Eigen::MatrixXd& data,
                                             const TrainConfig& cfg);

// bit j = 1 iff w_j.d + b_j > 0 (equivalently hidden prob > 0.5)
BinaryHash rbm_hash(const RbmParams& p, const Descriptor& d);

// "NIPR" model file: magic | version u32 | I u32 | J u32 | metadata |
// c, b, W row-major, all float64 LE
void save_rbm(const std::string& path, const RbmParams& p, const Metadata& meta);
RbmParams load_rbm(const std::string& path, Metadata* meta_out = nullptr);

}  // namespace nip
