#include "nip/postproc.hpp"

#include <algorithm>
#include <cmath>

namespace nip {

Descriptor l2_normalize(const Descriptor& d) {
  Descriptor out = d;
  double sq = 0.0;
  for (float v : out.values) sq += static_cast<double>(v) * v;
  if (sq == 0.0) return out;  // all-zero input stays all-zero
  double inv = 1.0 / std::sqrt(sq);
  for (float& v : out.values) v = static_cast<float>(v * inv);
  return out;
}

void l2_normalize_inplace(DescriptorTable& table) {
  for (size_t i = 0; i < table.size(); ++i) {
    auto row = table.row_mut(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) continue;
    double inv = 1.0 / std::sqrt(sq);
    for (float& v : row) v = static_cast<float>(v * inv);
  }
}

Eigen::MatrixXd to_matrix(const DescriptorTable& table) {
  Eigen::MatrixXd X(table.size(), table.dim());
  for (size_t i = 0; i < table.size(); ++i) {
    auto row = table.row(i);
    for (size_t j = 0; j < row.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return X;
}

PcaModel fit_pca_whitening(const Eigen::MatrixXd& X, uint32_t out_dim,
                           double epsilon, bool whiten) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DegenerateData("PCA needs at least 2 observations");
  if (out_dim < 1 || static_cast<Eigen::Index>(out_dim) > std::min(n - 1, d))
    throw DimError("out_dim " + std::to_string(out_dim) +
                   " exceeds min(N-1, D) = " +
                   std::to_string(std::min(n - 1, d)));
  if (epsilon < 0.0) throw DomainError("epsilon must be non-negative");

  PcaModel m;
  m.epsilon = epsilon;
  m.whiten = whiten;
  m.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();

  double data_scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if (centered.cwiseAbs().maxCoeff() <= 1e-12 * data_scale)
    throw DegenerateData("all observations identical");

  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericalDivergence("eigendecomposition failed");

  // solver returns eigenvalues ascending; take the top out_dim descending
  m.eigenvalues.resize(out_dim);
  m.projection.resize(out_dim, d);
  for (uint32_t k = 0; k < out_dim; ++k) {
    Eigen::Index src = d - 1 - static_cast<Eigen::Index>(k);
    double lambda = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // deterministic sign: largest-magnitude component is positive
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    m.eigenvalues(k) = lambda;
    if (whiten) {
      double denom = lambda + epsilon;
      if (denom <= 0.0)
        throw DegenerateData(
            "zero-variance component with epsilon=0; raise epsilon or lower "
            "out_dim");
      v /= std::sqrt(denom);
    }
    m.projection.row(k) = v.transpose();
  }
  return m;
}

PcaModel fit_pca_whitening(const DescriptorTable& table, uint32_t out_dim,
                           double epsilon, bool whiten) {
  return fit_pca_whitening(to_matrix(table), out_dim, epsilon, whiten);
}

Eigen::VectorXd PcaModel::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size())
    throw DimError("input dim " + std::to_string(x.size()) +
                   " does not match model input dim " +
                   std::to_string(mean.size()));
  return projection * (x - mean);
}

Descriptor apply_pca_whitening(const PcaModel& m, const Descriptor& d) {
  Eigen::VectorXd x(d.values.size());
  for (size_t i = 0; i < d.values.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = d.values[i];
  Eigen::VectorXd y = m.apply(x);
  Descriptor out;
  out.image_id = d.image_id;
  out.sequence = d.sequence;
  out.values.resize(static_cast<size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out.values[static_cast<size_t>(i)] = static_cast<float>(y(i));
  return out;
}

DescriptorTable apply_pca_whitening(const PcaModel& m,
                                    const DescriptorTable& table) {
  if (table.dim() != m.in_dim())
    throw DimError("table dim " + std::to_string(table.dim()) +
                   " does not match model input dim " +
                   std::to_string(m.in_dim()));
  DescriptorTable out(static_cast<uint32_t>(m.out_dim()));
  out.metadata() = table.metadata();
  Eigen::VectorXd x(table.dim());
  std::vector<float> y(m.out_dim());
  for (size_t i = 0; i < table.size(); ++i) {
    auto row = table.row(i);
    for (size_t j = 0; j < row.size(); ++j)
      x(static_cast<Eigen::Index>(j)) = row[j];
    Eigen::VectorXd p = m.apply(x);
    for (size_t j = 0; j < y.size(); ++j)
      y[j] = static_cast<float>(p(static_cast<Eigen::Index>(j)));
    out.add(table.ids()[i], y);
  }
  return out;
}

BinaryHash binarize_threshold(const Descriptor& d, double threshold) {
  BinaryHash h = BinaryHash::zeros(d.image_id,
                                   static_cast<uint32_t>(d.values.size()));
  for (uint32_t j = 0; j < h.n_bits; ++j)
    if (static_cast<double>(d.values[j]) > threshold) h.set(j, true);
  return h;
}

ThresholdModel fit_threshold_median(const DescriptorTable& table) {
  if (table.size() == 0) throw ValidationError("empty training table");
  ThresholdModel m;
  m.median_mode = true;
  m.thresholds.resize(table.dim());
  std::vector<double> col(table.size());
  for (uint32_t j = 0; j < table.dim(); ++j) {
    for (size_t i = 0; i < table.size(); ++i) col[i] = table.row(i)[j];
    std::sort(col.begin(), col.end());
    size_t n = col.size();
    m.thresholds(j) =
        (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return m;
}

ThresholdModel make_threshold_fixed(uint32_t dim, double value) {
  ThresholdModel m;
  m.median_mode = false;
  m.fixed_value = value;
  m.thresholds = Eigen::VectorXd::Constant(dim, value);
  return m;
}

BinaryHash apply_threshold(const ThresholdModel& m, const Descriptor& d) {
  if (d.values.size() != m.dim())
    throw DimError("descriptor dim " + std::to_string(d.values.size()) +
                   " does not match threshold dim " + std::to_string(m.dim()));
  BinaryHash h = BinaryHash::zeros(d.image_id,
                                   static_cast<uint32_t>(d.values.size()));
  for (uint32_t j = 0; j < h.n_bits; ++j)
    if (static_cast<double>(d.values[j]) > m.thresholds(j)) h.set(j, true);
  return h;
}

}  // namespace nip
