#include "nip/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "nip/rng.hpp"

namespace nip {

namespace {

constexpr double kProbFloor = 1e-15;  // keeps probabilities inside (0,1)
constexpr double kLogClamp = 1e-7;

double stable_sigmoid(double u) {
  double s;
  if (u >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-u));
  } else {
    double e = std::exp(u);
    s = e / (1.0 + e);
  }
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, s));
}

void sigmoid_inplace(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = stable_sigmoid(m(i, j));
}

double softplus(double u) {
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ValidationError("learning_rate must be > 0");
  if (cd_k < 1) throw ValidationError("cd_k must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  if (lambda > 0.0 && batch_size < 2)
    throw ValidationError("batch_size must be >= 2 when lambda > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ValidationError("momentum must be in [0,1)");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
}

Metadata TrainConfig::to_metadata() const {
  Metadata m;
  m.set("learning_rate", learning_rate);
  m.set("cd_k", static_cast<uint64_t>(cd_k));
  m.set("batch_size", static_cast<uint64_t>(batch_size));
  m.set("epochs", static_cast<uint64_t>(epochs));
  m.set("lambda", lambda);
  m.set("momentum", momentum);
  m.set("weight_decay", weight_decay);
  m.set("seed", seed);
  return m;
}

TrainConfig TrainConfig::from_metadata(const Metadata& m) {
  TrainConfig cfg;
  if (const std::string* s = m.find("learning_rate")) cfg.learning_rate = std::stod(*s);
  if (const std::string* s = m.find("cd_k")) cfg.cd_k = static_cast<uint32_t>(std::stoul(*s));
  if (const std::string* s = m.find("batch_size")) cfg.batch_size = static_cast<uint32_t>(std::stoul(*s));
  if (const std::string* s = m.find("epochs")) cfg.epochs = static_cast<uint32_t>(std::stoul(*s));
  if (const std::string* s = m.find("lambda")) cfg.lambda = std::stod(*s);
  if (const std::string* s = m.find("momentum")) cfg.momentum = std::stod(*s);
  if (const std::string* s = m.find("weight_decay")) cfg.weight_decay = std::stod(*s);
  if (const std::string* s = m.find("seed")) cfg.seed = std::stoull(*s);
  return cfg;
}

RbmParams init_rbm(uint32_t n_visible, uint32_t n_hidden, uint64_t seed) {
  if (n_visible < 1 || n_hidden < 1)
    throw DimError("RBM needs at least one visible and one hidden unit");
  RbmParams p;
  p.W.resize(n_hidden, n_visible);
  p.b = Eigen::VectorXd::Zero(n_hidden);
  p.c = Eigen::VectorXd::Zero(n_visible);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (uint32_t j = 0; j < n_hidden; ++j)
    for (uint32_t i = 0; i < n_visible; ++i) p.W(j, i) = noise(rng);
  return p;
}

Eigen::VectorXd hidden_probs(const RbmParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.W.cols())
    throw DimError("visible vector has dim " + std::to_string(x.size()) +
                   ", RBM expects " + std::to_string(p.W.cols()));
  Eigen::VectorXd u = p.W * x + p.b;
  for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = stable_sigmoid(u(j));
  return u;
}

Eigen::VectorXd visible_probs(const RbmParams& p, const Eigen::VectorXd& z) {
  if (z.size() != p.W.rows())
    throw DimError("hidden vector has dim " + std::to_string(z.size()) +
                   ", RBM expects " + std::to_string(p.W.rows()));
  Eigen::VectorXd u = p.W.transpose() * z + p.c;
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = stable_sigmoid(u(i));
  return u;
}

Eigen::MatrixXd hidden_probs_batch(const RbmParams& p, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd u = X * p.W.transpose();
  u.rowwise() += p.b.transpose();
  sigmoid_inplace(u);
  return u;
}

Eigen::MatrixXd visible_probs_batch(const RbmParams& p, const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd u = Z * p.W;
  u.rowwise() += p.c.transpose();
  sigmoid_inplace(u);
  return u;
}

Eigen::MatrixXd sample_targets(uint32_t batch_size, uint32_t n_hidden,
                               std::mt19937_64& rng) {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  Eigen::MatrixXd t(batch_size, n_hidden);
  for (uint32_t a = 0; a < batch_size; ++a)
    for (uint32_t j = 0; j < n_hidden; ++j) t(a, j) = uniform_open01(rng);
  return t;
}

double regularizer(const Eigen::MatrixXd& z_probs, const Eigen::MatrixXd& targets) {
  if (z_probs.rows() != targets.rows() || z_probs.cols() != targets.cols())
    throw DimError("activation and target matrices disagree in shape");
  double h = 0.0;
  for (Eigen::Index a = 0; a < z_probs.rows(); ++a)
    for (Eigen::Index j = 0; j < z_probs.cols(); ++j) {
      double z = std::min(1.0 - kLogClamp, std::max(kLogClamp, z_probs(a, j)));
      double t = targets(a, j);
      h += t * std::log(z) + (1.0 - t) * std::log1p(-z);
    }
  return h;
}

CdState CdState::zeros(uint32_t n_visible, uint32_t n_hidden) {
  CdState s;
  s.vel_w = Eigen::MatrixXd::Zero(n_hidden, n_visible);
  s.vel_b = Eigen::VectorXd::Zero(n_hidden);
  s.vel_c = Eigen::VectorXd::Zero(n_visible);
  return s;
}

namespace {

// Bernoulli sample in fixed row-major order; determinism contract.
Eigen::MatrixXd sample_bernoulli(const Eigen::MatrixXd& probs,
                                 std::mt19937_64& rng) {
  Eigen::MatrixXd out(probs.rows(), probs.cols());
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index a = 0; a < probs.rows(); ++a)
    for (Eigen::Index j = 0; j < probs.cols(); ++j)
      out(a, j) = dist(rng) < probs(a, j) ? 1.0 : 0.0;
  return out;
}

}  // namespace

BatchStats cd_update(RbmParams& p, CdState& state, const Eigen::MatrixXd& batch,
                     const TrainConfig& cfg, std::mt19937_64& rng) {
  const Eigen::Index B = batch.rows();
  if (B < 1) throw ValidationError("empty batch");
  if (batch.cols() != p.W.cols())
    throw DimError("batch dim " + std::to_string(batch.cols()) +
                   " does not match RBM visible dim " +
                   std::to_string(p.W.cols()));
  const double invB = 1.0 / static_cast<double>(B);

  // targets first, then Gibbs noise: fixed stream layout per batch
  Eigen::MatrixXd targets =
      sample_targets(static_cast<uint32_t>(B), p.hidden(), rng);

  Eigen::MatrixXd z0 = hidden_probs_batch(p, batch);
  Eigen::MatrixXd h = sample_bernoulli(z0, rng);
  Eigen::MatrixXd xr, zk;
  for (uint32_t step = 0; step < cfg.cd_k; ++step) {
    xr = visible_probs_batch(p, h);  // mean-field visible, never sampled
    zk = hidden_probs_batch(p, xr);
    if (step + 1 < cfg.cd_k) h = sample_bernoulli(zk, rng);
  }

  Eigen::MatrixXd grad_w = (z0.transpose() * batch - zk.transpose() * xr) * invB;
  Eigen::VectorXd grad_b = (z0.colwise().sum() - zk.colwise().sum()).transpose() * invB;
  Eigen::VectorXd grad_c = (batch.colwise().sum() - xr.colwise().sum()).transpose() * invB;

  if (cfg.lambda > 0.0) {
    Eigen::MatrixXd diff = targets - z0;  // d h/d z flows through the data phase
    grad_w += cfg.lambda * invB * (diff.transpose() * batch);
    grad_b += cfg.lambda * invB * diff.colwise().sum().transpose();
  }
  grad_w -= cfg.weight_decay * p.W;

  state.vel_w = cfg.momentum * state.vel_w + cfg.learning_rate * grad_w;
  state.vel_b = cfg.momentum * state.vel_b + cfg.learning_rate * grad_b;
  state.vel_c = cfg.momentum * state.vel_c + cfg.learning_rate * grad_c;
  p.W += state.vel_w;
  p.b += state.vel_b;
  p.c += state.vel_c;

  if (!p.W.allFinite() || !p.b.allFinite() || !p.c.allFinite())
    throw NumericalDivergence("RBM parameters became non-finite; lower the learning rate");

  BatchStats stats;
  stats.recon_error = (batch - xr).squaredNorm() / static_cast<double>(B * batch.cols());
  stats.reg_value = regularizer(z0, targets);
  stats.bit_means = z0.colwise().mean().transpose();
  return stats;
}

double exact_ll(const RbmParams& p, const Eigen::MatrixXd& batch) {
  const uint32_t I = p.visible();
  const uint32_t J = p.hidden();
  if (I > 12 || J > 12)
    throw OracleTooLarge("exact likelihood oracle limited to <=12 units per layer");

  // log of unnormalized marginal: log w(x) = c.x + sum_j softplus(w_j.x + b_j)
  auto log_weight = [&](const Eigen::VectorXd& x) {
    double lw = p.c.dot(x);
    Eigen::VectorXd u = p.W * x + p.b;
    for (Eigen::Index j = 0; j < u.size(); ++j) lw += softplus(u(j));
    return lw;
  };

  const uint64_t n_states = 1ull << I;
  double max_lw = -1e300;
  std::vector<double> lws(n_states);
  Eigen::VectorXd x(I);
  for (uint64_t s = 0; s < n_states; ++s) {
    for (uint32_t i = 0; i < I; ++i) x(i) = (s >> i) & 1 ? 1.0 : 0.0;
    lws[s] = log_weight(x);
    max_lw = std::max(max_lw, lws[s]);
  }
  double zsum = 0.0;
  for (double lw : lws) zsum += std::exp(lw - max_lw);
  double log_z = max_lw + std::log(zsum);

  double ll = 0.0;
  for (Eigen::Index a = 0; a < batch.rows(); ++a)
    ll += log_weight(batch.row(a).transpose()) - log_z;
  return ll;
}

RbmGradients exact_ll_grad(const RbmParams& p, const Eigen::MatrixXd& batch) {
  const uint32_t I = p.visible();
  const uint32_t J = p.hidden();
  if (I > 12 || J > 12)
    throw OracleTooLarge("exact likelihood oracle limited to <=12 units per layer");
  if (batch.cols() != static_cast<Eigen::Index>(I))
    throw DimError("batch dim does not match RBM visible dim");

  // model expectations over all 2^I visible states, hidden marginalized
  const uint64_t n_states = 1ull << I;
  std::vector<double> lws(n_states);
  Eigen::VectorXd x(I);
  double max_lw = -1e300;
  for (uint64_t s = 0; s < n_states; ++s) {
    for (uint32_t i = 0; i < I; ++i) x(i) = (s >> i) & 1 ? 1.0 : 0.0;
    double lw = p.c.dot(x);
    Eigen::VectorXd u = p.W * x + p.b;
    for (Eigen::Index j = 0; j < u.size(); ++j) lw += softplus(u(j));
    lws[s] = lw;
    max_lw = std::max(max_lw, lw);
  }
  double zsum = 0.0;
  for (double lw : lws) zsum += std::exp(lw - max_lw);

  Eigen::MatrixXd e_zx = Eigen::MatrixXd::Zero(J, I);
  Eigen::VectorXd e_z = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd e_x = Eigen::VectorXd::Zero(I);
  for (uint64_t s = 0; s < n_states; ++s) {
    for (uint32_t i = 0; i < I; ++i) x(i) = (s >> i) & 1 ? 1.0 : 0.0;
    double prob = std::exp(lws[s] - max_lw) / zsum;
    Eigen::VectorXd z = p.W * x + p.b;
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = stable_sigmoid(z(j));
    e_zx += prob * (z * x.transpose());
    e_z += prob * z;
    e_x += prob * x;
  }

  RbmGradients g;
  g.W = Eigen::MatrixXd::Zero(J, I);
  g.b = Eigen::VectorXd::Zero(J);
  g.c = Eigen::VectorXd::Zero(I);
  const double n = static_cast<double>(batch.rows());
  for (Eigen::Index a = 0; a < batch.rows(); ++a) {
    Eigen::VectorXd xa = batch.row(a).transpose();
    Eigen::VectorXd z = p.W * xa + p.b;
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = stable_sigmoid(z(j));
    g.W += z * xa.transpose();
    g.b += z;
    g.c += xa;
  }
  g.W -= n * e_zx;
  g.b -= n * e_z;
  g.c -= n * e_x;
  return g;
}

std::pair<RbmParams, TrainHistory> train_rbm(RbmParams p,
                                             const Eigen::MatrixXd& data,
                                             const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index N = data.rows();
  if (N < static_cast<Eigen::Index>(cfg.batch_size))
    throw ValidationError("dataset smaller than one batch");
  if (data.cols() != p.W.cols())
    throw DimError("data dim does not match RBM visible dim");

  TrainHistory history;
  CdState state = CdState::zeros(p.visible(), p.hidden());
  std::mt19937_64 rng = make_rng(cfg.seed, "rbm-train");
  std::vector<Eigen::Index> order(N);
  for (Eigen::Index i = 0; i < N; ++i) order[i] = i;

  for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats es;
    es.bit_means = Eigen::VectorXd::Zero(p.hidden());
    size_t n_batches = 0;
    double samples_seen = 0.0;
    for (Eigen::Index start = 0; start < N;
         start += static_cast<Eigen::Index>(cfg.batch_size)) {
      Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, N - start);
      Eigen::MatrixXd batch(bs, data.cols());
      for (Eigen::Index r = 0; r < bs; ++r)
        batch.row(r) = data.row(order[static_cast<size_t>(start + r)]);
      BatchStats bs_stats = cd_update(p, state, batch, cfg, rng);
      es.recon_error += bs_stats.recon_error;
      es.regularizer += bs_stats.reg_value;
      es.bit_means += bs_stats.bit_means * static_cast<double>(bs);
      samples_seen += static_cast<double>(bs);
      ++n_batches;
    }
    if (n_batches > 0) {
      es.recon_error /= static_cast<double>(n_batches);
      es.regularizer /= static_cast<double>(n_batches);
      es.bit_means /= samples_seen;
    }
    history.epochs.push_back(std::move(es));
  }
  return {std::move(p), std::move(history)};
}

BinaryHash rbm_hash(const RbmParams& p, const Descriptor& d) {
  if (d.values.size() != p.visible())
    throw DimError("descriptor dim " + std::to_string(d.values.size()) +
                   " does not match RBM visible dim " +
                   std::to_string(p.visible()));
  Eigen::VectorXd x(d.values.size());
  for (size_t i = 0; i < d.values.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = d.values[i];
  Eigen::VectorXd u = p.W * x + p.b;  // sign test == prob > 0.5
  BinaryHash h = BinaryHash::zeros(d.image_id, p.hidden());
  for (uint32_t j = 0; j < h.n_bits; ++j)
    if (u(j) > 0.0) h.set(j, true);
  return h;
}

void save_rbm(const std::string& path, const RbmParams& p, const Metadata& meta) {
  BinWriter w(path);
  w.bytes("NIPR", 4);
  w.u32(1);
  w.u32(p.visible());
  w.u32(p.hidden());
  meta.write(w);
  for (uint32_t i = 0; i < p.visible(); ++i) w.f64(p.c(i));
  for (uint32_t j = 0; j < p.hidden(); ++j) w.f64(p.b(j));
  for (uint32_t j = 0; j < p.hidden(); ++j)
    for (uint32_t i = 0; i < p.visible(); ++i) w.f64(p.W(j, i));
  w.close();
}

RbmParams load_rbm(const std::string& path, Metadata* meta_out) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "NIPR", 4) != 0)
    throw CorruptStore("'" + path + "' is not a NIPR model file");
  if (r.u32() != 1) throw CorruptStore("unsupported NIPR version");
  uint32_t I = r.u32();
  uint32_t J = r.u32();
  Metadata meta = Metadata::read(r);
  if (meta_out) *meta_out = meta;
  RbmParams p;
  p.c.resize(I);
  p.b.resize(J);
  p.W.resize(J, I);
  for (uint32_t i = 0; i < I; ++i) p.c(i) = r.f64();
  for (uint32_t j = 0; j < J; ++j) p.b(j) = r.f64();
  for (uint32_t j = 0; j < J; ++j)
    for (uint32_t i = 0; i < I; ++i) p.W(j, i) = r.f64();
  return p;
}

}  // namespace nip
