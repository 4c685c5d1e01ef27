#include "nip/model_io.hpp"

#include <cstring>

namespace nip {

namespace {

constexpr uint32_t kVersion = 1;

void write_pca_payload(BinWriter& w, const PcaModel& m) {
  w.u8(m.whiten ? 1 : 0);
  w.f64(m.epsilon);
  w.u32(static_cast<uint32_t>(m.in_dim()));
  w.u32(static_cast<uint32_t>(m.out_dim()));
  for (size_t i = 0; i < m.in_dim(); ++i) w.f64(m.mean(static_cast<Eigen::Index>(i)));
  for (size_t k = 0; k < m.out_dim(); ++k)
    w.f64(m.eigenvalues(static_cast<Eigen::Index>(k)));
  for (size_t k = 0; k < m.out_dim(); ++k)
    for (size_t i = 0; i < m.in_dim(); ++i)
      w.f64(m.projection(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)));
}

PcaModel read_pca_payload(BinReader& r) {
  PcaModel m;
  m.whiten = r.u8() != 0;
  m.epsilon = r.f64();
  uint32_t in_dim = r.u32();
  uint32_t out_dim = r.u32();
  m.mean.resize(in_dim);
  m.eigenvalues.resize(out_dim);
  m.projection.resize(out_dim, in_dim);
  for (uint32_t i = 0; i < in_dim; ++i) m.mean(i) = r.f64();
  for (uint32_t k = 0; k < out_dim; ++k) m.eigenvalues(k) = r.f64();
  for (uint32_t k = 0; k < out_dim; ++k)
    for (uint32_t i = 0; i < in_dim; ++i) m.projection(k, i) = r.f64();
  return m;
}

void open_nipm(BinReader& r, std::string* method, Metadata* meta) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "NIPM", 4) != 0)
    throw CorruptStore("not a NIPM model file");
  if (r.u32() != kVersion) throw CorruptStore("unsupported NIPM version");
  *method = r.str();
  *meta = Metadata::read(r);
}

void begin_nipm(BinWriter& w, const std::string& method, const Metadata& meta) {
  w.bytes("NIPM", 4);
  w.u32(kVersion);
  w.str(method);
  meta.write(w);
}

}  // namespace

void save_pca_model(const std::string& path, const PcaModel& m,
                    const Metadata& meta) {
  BinWriter w(path);
  begin_nipm(w, "pca", meta);
  write_pca_payload(w, m);
  w.close();
}

PcaModel load_pca_model(const std::string& path, Metadata* meta_out) {
  BinReader r(path);
  std::string method;
  Metadata meta;
  open_nipm(r, &method, &meta);
  if (method != "pca")
    throw CorruptStore("expected a pca model, found '" + method + "'");
  if (meta_out) *meta_out = meta;
  return read_pca_payload(r);
}

uint32_t HasherModel::n_bits() const {
  if (method == "rbmh") return rbm.hidden();
  if (method == "lsh") return lsh.n_bits();
  if (method == "pcahash") return static_cast<uint32_t>(pca.out_dim());
  if (method == "itq") return itq.n_bits();
  if (method == "threshold") return static_cast<uint32_t>(threshold.dim());
  throw ValidationError("unknown hasher method '" + method + "'");
}

uint32_t HasherModel::input_dim() const {
  if (method == "rbmh") return rbm.visible();
  if (method == "lsh") return lsh.dim();
  if (method == "pcahash") return static_cast<uint32_t>(pca.in_dim());
  if (method == "itq") return static_cast<uint32_t>(itq.pca.in_dim());
  if (method == "threshold") return static_cast<uint32_t>(threshold.dim());
  throw ValidationError("unknown hasher method '" + method + "'");
}

BinaryHash HasherModel::hash(const Descriptor& d) const {
  if (method == "rbmh") return rbm_hash(rbm, d);
  if (method == "lsh") return lsh_hash(lsh, d);
  if (method == "pcahash") return pcahash_hash(pca, d);
  if (method == "itq") return itq_hash(itq, d);
  if (method == "threshold") return apply_threshold(threshold, d);
  throw ValidationError("unknown hasher method '" + method + "'");
}

void HasherModel::save(const std::string& path) const {
  if (method == "rbmh") {
    save_rbm(path, rbm, meta);
    return;
  }
  BinWriter w(path);
  begin_nipm(w, method, meta);
  if (method == "lsh") {
    w.u64(lsh.seed);
    w.u32(lsh.dim());
    w.u32(lsh.n_bits());
    for (uint32_t j = 0; j < lsh.n_bits(); ++j)
      for (uint32_t i = 0; i < lsh.dim(); ++i) w.f64(lsh.projections(j, i));
  } else if (method == "pcahash") {
    write_pca_payload(w, pca);
  } else if (method == "itq") {
    write_pca_payload(w, itq.pca);
    w.u32(itq.iterations);
    uint32_t n = itq.n_bits();
    w.u32(n);
    for (uint32_t r = 0; r < n; ++r)
      for (uint32_t c = 0; c < n; ++c) w.f64(itq.rotation(r, c));
  } else if (method == "threshold") {
    w.u8(threshold.median_mode ? 1 : 0);
    w.f64(threshold.fixed_value);
    w.u32(static_cast<uint32_t>(threshold.dim()));
    for (size_t j = 0; j < threshold.dim(); ++j)
      w.f64(threshold.thresholds(static_cast<Eigen::Index>(j)));
  } else {
    throw ValidationError("unknown hasher method '" + method + "'");
  }
  w.close();
}

HasherModel HasherModel::load(const std::string& path) {
  HasherModel m;
  {
    BinReader probe(path);
    char magic[4];
    probe.bytes(magic, 4);
    if (std::memcmp(magic, "NIPR", 4) == 0) {
      m.method = "rbmh";
      m.rbm = load_rbm(path, &m.meta);
      return m;
    }
  }
  BinReader r(path);
  open_nipm(r, &m.method, &m.meta);
  if (m.method == "lsh") {
    m.lsh.seed = r.u64();
    uint32_t dim = r.u32();
    uint32_t bits = r.u32();
    m.lsh.projections.resize(bits, dim);
    for (uint32_t j = 0; j < bits; ++j)
      for (uint32_t i = 0; i < dim; ++i) m.lsh.projections(j, i) = r.f64();
  } else if (m.method == "pcahash" || m.method == "pca") {
    m.pca = read_pca_payload(r);
    if (m.method == "pca") m.method = "pcahash";
  } else if (m.method == "itq") {
    m.itq.pca = read_pca_payload(r);
    m.itq.iterations = r.u32();
    uint32_t n = r.u32();
    m.itq.rotation.resize(n, n);
    for (uint32_t row = 0; row < n; ++row)
      for (uint32_t col = 0; col < n; ++col) m.itq.rotation(row, col) = r.f64();
  } else if (m.method == "threshold") {
    m.threshold.median_mode = r.u8() != 0;
    m.threshold.fixed_value = r.f64();
    uint32_t dim = r.u32();
    m.threshold.thresholds.resize(dim);
    for (uint32_t j = 0; j < dim; ++j) m.threshold.thresholds(j) = r.f64();
  } else {
    throw CorruptStore("unknown model method '" + m.method + "'");
  }
  return m;
}

}  // namespace nip
