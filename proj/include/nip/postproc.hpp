#pragma once

// Descriptor post-processing: L2 normalization, PCA whitening to a target
// dimension, and direct threshold binarization of descriptors.

#include <Eigen/Dense>

#include "nip/descriptor.hpp"

namespace nip {

Descriptor l2_normalize(const Descriptor& d);
void l2_normalize_inplace(DescriptorTable& table);

struct PcaModel {
  Eigen::VectorXd mean;         // input dim
  Eigen::MatrixXd projection;   // out_dim x in_dim; rows carry the whitening
                                // scale 1/sqrt(lambda + epsilon) when whiten
  Eigen::VectorXd eigenvalues;  // out_dim, sorted descending
  double epsilon = 0.0;
  bool whiten = true;

  size_t in_dim() const { return static_cast<size_t>(mean.size()); }
  size_t out_dim() const { return static_cast<size_t>(projection.rows()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

// Centers by the column mean, projects onto the top out_dim eigenvectors of
// the sample covariance (1/(N-1)), and scales row k by 1/sqrt(lambda_k +
// epsilon). Rows of X are observations. whiten=false keeps plain projections
// (used by the PCA-sign and ITQ hashers).
PcaModel fit_pca_whitening(const Eigen::MatrixXd& X, uint32_t out_dim,
                           double epsilon, bool whiten = true);
PcaModel fit_pca_whitening(const DescriptorTable& table, uint32_t out_dim,
                           double epsilon, bool whiten = true);

Descriptor apply_pca_whitening(const PcaModel& m, const Descriptor& d);
DescriptorTable apply_pca_whitening(const PcaModel& m,
                                    const DescriptorTable& table);

// bit j = 1 iff d_j > threshold (strict; ties give 0)
BinaryHash binarize_threshold(const Descriptor& d, double threshold);

// Per-dimension thresholds for "binarized descriptor" hashing. Median mode
// computes column medians on a training set; fixed mode uses one value.
struct ThresholdModel {
  bool median_mode = true;
  double fixed_value = 0.0;
  Eigen::VectorXd thresholds;  // per dimension

  size_t dim() const { return static_cast<size_t>(thresholds.size()); }
};

ThresholdModel fit_threshold_median(const DescriptorTable& table);
ThresholdModel make_threshold_fixed(uint32_t dim, double value);
BinaryHash apply_threshold(const ThresholdModel& m, const Descriptor& d);

Eigen::MatrixXd to_matrix(const DescriptorTable& table);

}  // namespace nip
