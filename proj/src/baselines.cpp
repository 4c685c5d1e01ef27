#include "nip/baselines.hpp"

#include <random>

namespace nip {

namespace {

Eigen::VectorXd to_eigen(const Descriptor& d) {
  Eigen::VectorXd x(d.values.size());
  for (size_t i = 0; i < d.values.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = d.values[i];
  return x;
}

BinaryHash sign_bits(const std::string& id, const Eigen::VectorXd& v) {
  BinaryHash h = BinaryHash::zeros(id, static_cast<uint32_t>(v.size()));
  for (uint32_t j = 0; j < h.n_bits; ++j)
    if (v(j) > 0.0) h.set(j, true);
  return h;
}

}  // namespace

LshModel lsh_fit(uint32_t dim, uint32_t n_bits, uint64_t seed) {
  if (n_bits < 1) throw DimError("n_bits must be >= 1");
  if (dim < 1) throw DimError("dim must be >= 1");
  LshModel m;
  m.seed = seed;
  m.projections.resize(n_bits, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (uint32_t j = 0; j < n_bits; ++j)
    for (uint32_t i = 0; i < dim; ++i) m.projections(j, i) = gauss(rng);
  return m;
}

BinaryHash lsh_hash(const LshModel& m, const Descriptor& d) {
  if (d.values.size() != m.dim())
    throw DimError("descriptor dim " + std::to_string(d.values.size()) +
                   " does not match LSH dim " + std::to_string(m.dim()));
  return sign_bits(d.image_id, m.projections * to_eigen(d));
}

PcaModel pcahash_fit(const Eigen::MatrixXd& X, uint32_t n_bits) {
  return fit_pca_whitening(X, n_bits, 0.0, /*whiten=*/false);
}

BinaryHash pcahash_hash(const PcaModel& m, const Descriptor& d) {
  return sign_bits(d.image_id, m.apply(to_eigen(d)));
}

ItqModel itq_fit(const Eigen::MatrixXd& X, uint32_t n_bits,
                 uint32_t iterations, uint64_t seed) {
  if (iterations < 1) throw ValidationError("ITQ needs at least one iteration");
  ItqModel m;
  m.pca = pcahash_fit(X, n_bits);
  m.iterations = iterations;

  Eigen::MatrixXd centered = X.rowwise() - m.pca.mean.transpose();
  Eigen::MatrixXd v = centered * m.pca.projection.transpose();  // N x n_bits

  // random orthogonal init: QR of a Gaussian matrix, sign-fixed on diag(R)
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n_bits, n_bits);
  for (uint32_t r = 0; r < n_bits; ++r)
    for (uint32_t c = 0; c < n_bits; ++c) g(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd rot = qr.householderQ();
  Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (uint32_t j = 0; j < n_bits; ++j)
    if (rmat(j, j) < 0.0) rot.col(j) = -rot.col(j);

  Eigen::MatrixXd bmat(v.rows(), n_bits);
  for (uint32_t it = 0; it < iterations; ++it) {
    Eigen::MatrixXd projected = v * rot;
    for (Eigen::Index r = 0; r < projected.rows(); ++r)
      for (Eigen::Index c = 0; c < projected.cols(); ++c)
        bmat(r, c) = projected(r, c) > 0.0 ? 1.0 : -1.0;
    m.loss_history.push_back((bmat - projected).squaredNorm());
    // Procrustes: R = U V^T from SVD(V^T B)
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        v.transpose() * bmat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    rot = svd.matrixU() * svd.matrixV().transpose();
  }
  m.rotation = rot;
  return m;
}

BinaryHash itq_hash(const ItqModel& m, const Descriptor& d) {
  Eigen::VectorXd p = m.pca.apply(to_eigen(d));
  return sign_bits(d.image_id, m.rotation.transpose() * p);
}

}  // namespace nip
