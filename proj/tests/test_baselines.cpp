#include <doctest.h>

#include <cmath>
#include <random>

#include "nip/baselines.hpp"
#include "nip/model_io.hpp"
#include "test_util.hpp"

using namespace nip;

namespace {

Descriptor make_desc(std::vector<float> values, const std::string& id = "d") {
  Descriptor d;
  d.image_id = id;
  d.values = std::move(values);
  return d;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
  return x;
}

}  // namespace

TEST_CASE("lsh_fit: deterministic Gaussian projections of the right shape") {
  LshModel a = lsh_fit(512, 256, 5);
  LshModel b = lsh_fit(512, 256, 5);
  CHECK(a.projections == b.projections);
  CHECK(a.projections.rows() == 256);
  CHECK(a.projections.cols() == 512);
  CHECK_FALSE(lsh_fit(512, 256, 6).projections == a.projections);

  // normality sanity on one long row: mean ~ 0, var ~ 1 within 4 sigma
  LshModel wide = lsh_fit(10000, 1, 11);
  double mean = wide.projections.row(0).mean();
  double var = wide.projections.row(0).array().square().mean() - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(10000.0));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / 10000.0));
}

TEST_CASE("lsh_hash sign behavior") {
  LshModel m = lsh_fit(8, 16, 3);
  BinaryHash zero = lsh_hash(m, make_desc(std::vector<float>(8, 0.0f)));
  for (uint32_t j = 0; j < 16; ++j) CHECK_FALSE(zero.get(j));  // strict at 0

  std::mt19937_64 rng(4);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<float> v(8);
  for (float& x : v) x = gauss(rng) + 0.01f;
  std::vector<float> neg(8), scaled(8);
  for (size_t i = 0; i < 8; ++i) {
    neg[i] = -v[i];
    scaled[i] = 7.5f * v[i];
  }
  BinaryHash hv = lsh_hash(m, make_desc(v));
  BinaryHash hn = lsh_hash(m, make_desc(neg));
  BinaryHash hs = lsh_hash(m, make_desc(scaled));
  for (uint32_t j = 0; j < 16; ++j) {
    CHECK(hv.get(j) != hn.get(j));  // antisymmetry (no exact zeros here)
    CHECK(hv.get(j) == hs.get(j));  // positive-scale invariance
  }

  CHECK_THROWS_AS(lsh_hash(m, make_desc({1.0f})), DimError);
}

TEST_CASE("pcahash: the data mean hashes to all zeros") {
  // integer coordinates over 8 rows keep the column means exact in float
  std::mt19937_64 rng(21);
  Eigen::MatrixXd x(8, 6);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = static_cast<double>(rng() % 16);
  PcaModel m = pcahash_fit(x, 4);
  Eigen::VectorXd mean = x.colwise().mean();
  std::vector<float> mean_f(6);
  for (int i = 0; i < 6; ++i) mean_f[i] = static_cast<float>(mean(i));
  BinaryHash h = pcahash_hash(m, make_desc(mean_f));
  for (uint32_t j = 0; j < 4; ++j) CHECK_FALSE(h.get(j));
}

TEST_CASE("pcahash on collinear data splits the line at its mean") {
  // points along the positive direction (1,1,1): scalar positions t
  std::vector<double> ts = {1.0, 2.0, 3.0, 10.0};
  Eigen::MatrixXd x(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = ts[static_cast<size_t>(i)];
  PcaModel m = pcahash_fit(x, 1);
  // mean position is t=4; only t=10 lies above it
  std::vector<bool> bits;
  for (int i = 0; i < 4; ++i) {
    std::vector<float> row(3, static_cast<float>(ts[static_cast<size_t>(i)]));
    bits.push_back(pcahash_hash(m, make_desc(row)).get(0));
  }
  CHECK(bits[0] == bits[1]);
  CHECK(bits[1] == bits[2]);
  CHECK(bits[3] != bits[0]);
  // canonical eigenvector sign points along +(1,1,1), so t>mean sets the bit
  CHECK(bits[3]);
}

TEST_CASE("itq quantization loss is non-increasing and rotation orthogonal") {
  Eigen::MatrixXd x = random_matrix(120, 16, 33);
  ItqModel m = itq_fit(x, 8, 30, 4);
  REQUIRE(m.loss_history.size() == 30);
  for (size_t i = 1; i < m.loss_history.size(); ++i)
    CHECK(m.loss_history[i] <= m.loss_history[i - 1] + 1e-9);
  Eigen::MatrixXd gram = m.rotation.transpose() * m.rotation;
  CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(itq_fit(x, 8, 0, 4), ValidationError);
}

TEST_CASE("itq is deterministic given the seed") {
  Eigen::MatrixXd x = random_matrix(60, 10, 8);
  ItqModel a = itq_fit(x, 6, 15, 9);
  ItqModel b = itq_fit(x, 6, 15, 9);
  CHECK(a.rotation == b.rotation);
  CHECK(a.pca.projection == b.pca.projection);
}

TEST_CASE("itq with identity rotation reduces to pcahash") {
  Eigen::MatrixXd x = random_matrix(80, 12, 13);
  ItqModel m;
  m.pca = pcahash_fit(x, 5);
  m.rotation = Eigen::MatrixXd::Identity(5, 5);
  m.iterations = 1;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> v(12);
    for (float& e : v) e = dist(rng);
    BinaryHash hi = itq_hash(m, make_desc(v));
    BinaryHash hp = pcahash_hash(m.pca, make_desc(v));
    CHECK(hi.bits == hp.bits);
  }
}

TEST_CASE("itq hash is invariant to positive scaling of centered input") {
  Eigen::MatrixXd x = random_matrix(90, 8, 44);
  ItqModel m = itq_fit(x, 4, 20, 5);
  Eigen::VectorXd mean = m.pca.mean;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd dir(8);
    for (int i = 0; i < 8; ++i) dir(i) = gauss(rng);
    std::vector<float> near(8), far(8);
    for (int i = 0; i < 8; ++i) {
      near[i] = static_cast<float>(mean(i) + dir(i));
      far[i] = static_cast<float>(mean(i) + 3.0 * dir(i));
    }
    CHECK(itq_hash(m, make_desc(near)).bits == itq_hash(m, make_desc(far)).bits);
  }
}

TEST_CASE("itq produces 256-bit codes from 512-D input") {
  Eigen::MatrixXd x = random_matrix(300, 512, 77);
  ItqModel m = itq_fit(x, 256, 3, 1);
  CHECK(itq_hash(m, make_desc(std::vector<float>(512, 0.5f))).n_bits == 256);
}

TEST_CASE("hasher models round-trip through the container format") {
  TempDir tmp;
  Eigen::MatrixXd x = random_matrix(60, 10, 15);

  HasherModel lsh;
  lsh.method = "lsh";
  lsh.lsh = lsh_fit(10, 12, 3);
  lsh.save(tmp.file("lsh.nipm"));
  HasherModel lsh_back = HasherModel::load(tmp.file("lsh.nipm"));
  CHECK(lsh_back.method == "lsh");
  CHECK(lsh_back.lsh.projections == lsh.lsh.projections);

  HasherModel itq;
  itq.method = "itq";
  itq.itq = itq_fit(x, 6, 10, 4);
  itq.save(tmp.file("itq.nipm"));
  HasherModel itq_back = HasherModel::load(tmp.file("itq.nipm"));
  CHECK(itq_back.itq.rotation == itq.itq.rotation);
  CHECK(itq_back.itq.pca.projection == itq.itq.pca.projection);

  HasherModel thr;
  thr.method = "threshold";
  thr.threshold = make_threshold_fixed(10, 0.25);
  thr.save(tmp.file("thr.nipm"));
  HasherModel thr_back = HasherModel::load(tmp.file("thr.nipm"));
  CHECK(thr_back.threshold.thresholds == thr.threshold.thresholds);

  // hashes agree before and after the round trip
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(10);
  for (float& e : v) e = dist(rng);
  CHECK(lsh.hash(make_desc(v)).bits == lsh_back.hash(make_desc(v)).bits);
  CHECK(itq.hash(make_desc(v)).bits == itq_back.hash(make_desc(v)).bits);
  CHECK(thr.hash(make_desc(v)).bits == thr_back.hash(make_desc(v)).bits);
}

TEST_CASE("pca models round-trip through the container format") {
  TempDir tmp;
  Eigen::MatrixXd x = random_matrix(40, 6, 19);
  PcaModel m = fit_pca_whitening(x, 3, 1e-5);
  Metadata meta;
  meta.set("k", std::string("v"));
  save_pca_model(tmp.file("pca.nipm"), m, meta);
  Metadata back_meta;
  PcaModel back = load_pca_model(tmp.file("pca.nipm"), &back_meta);
  CHECK(back.mean == m.mean);
  CHECK(back.projection == m.projection);
  CHECK(back.eigenvalues == m.eigenvalues);
  CHECK(back.epsilon == m.epsilon);
  CHECK(*back_meta.find("k") == "v");
}
