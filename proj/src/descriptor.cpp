#include "nip/descriptor.hpp"

#include <cmath>
#include <cstring>

namespace nip {

namespace {
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;
}  // namespace

void DescriptorTable::add(const std::string& id, std::span<const float> values) {
  if (ids_.empty() && dim_ == 0) dim_ = static_cast<uint32_t>(values.size());
  if (values.size() != dim_)
    throw DimError("descriptor '" + id + "' has dim " +
                   std::to_string(values.size()) + ", table dim " +
                   std::to_string(dim_));
  for (float v : values)
    if (!std::isfinite(v))
      throw ValidationError("descriptor '" + id + "' has non-finite value");
  ids_.push_back(id);
  data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const float> DescriptorTable::row(size_t pos) const {
  return {data_.data() + pos * dim_, dim_};
}

std::span<float> DescriptorTable::row_mut(size_t pos) {
  return {data_.data() + pos * dim_, dim_};
}

int64_t DescriptorTable::find(const std::string& id) const {
  for (size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return static_cast<int64_t>(i);
  return -1;
}

Descriptor DescriptorTable::descriptor(size_t pos) const {
  Descriptor d;
  d.image_id = ids_[pos];
  if (const std::string* s = meta_.find("sequence")) d.sequence = *s;
  auto r = row(pos);
  d.values.assign(r.begin(), r.end());
  return d;
}

void DescriptorTable::save(const std::string& path) const {
  BinWriter w(path);
  w.bytes("NIPD", 4);
  w.u32(kVersion);
  w.u64(ids_.size());
  w.u32(dim_);
  w.u8(kDtypeF32);
  meta_.write(w);
  uint64_t index_bytes = 0;
  for (const auto& id : ids_) index_bytes += 2 + id.size() + 8;
  uint64_t payload = w.tell() + index_bytes;
  for (size_t i = 0; i < ids_.size(); ++i) {
    w.str(ids_[i]);
    w.u64(payload + i * static_cast<uint64_t>(dim_) * 4);
  }
  w.f32_array(data_.data(), data_.size());
  w.close();
}

DescriptorTable DescriptorTable::load(const std::string& path) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "NIPD", 4) != 0)
    throw CorruptStore("'" + path + "' is not a NIPD descriptor file");
  if (r.u32() != kVersion) throw CorruptStore("unsupported NIPD version");
  uint64_t n = r.u64();
  DescriptorTable t;
  t.dim_ = r.u32();
  if (r.u8() != kDtypeF32) throw CorruptStore("unsupported NIPD dtype");
  t.meta_ = Metadata::read(r);
  std::vector<uint64_t> offsets;
  for (uint64_t i = 0; i < n; ++i) {
    t.ids_.push_back(r.str());
    offsets.push_back(r.u64());
  }
  t.data_.resize(n * t.dim_);
  for (uint64_t i = 0; i < n; ++i) {
    if (offsets[i] + static_cast<uint64_t>(t.dim_) * 4 > r.size())
      throw CorruptStore("descriptor payload of '" + t.ids_[i] +
                         "' extends past end of file");
    r.seek(offsets[i]);
    r.f32_array(t.data_.data() + i * t.dim_, t.dim_);
  }
  return t;
}

BinaryHash BinaryHash::zeros(const std::string& id, uint32_t n_bits) {
  BinaryHash h;
  h.image_id = id;
  h.n_bits = n_bits;
  h.bits.assign((n_bits + 7) / 8, 0);
  return h;
}

void HashIndex::add(const BinaryHash& h) {
  if (ids_.empty() && n_bits_ == 0) n_bits_ = h.n_bits;
  if (h.n_bits != n_bits_)
    throw DimError("hash '" + h.image_id + "' has " + std::to_string(h.n_bits) +
                   " bits, index has " + std::to_string(n_bits_));
  if (h.bits.size() != stride())
    throw DimError("hash '" + h.image_id + "' has wrong byte count");
  ids_.push_back(h.image_id);
  codes_.insert(codes_.end(), h.bits.begin(), h.bits.end());
}

std::span<const uint8_t> HashIndex::code(size_t pos) const {
  return {codes_.data() + pos * stride(), stride()};
}

int64_t HashIndex::find(const std::string& id) const {
  for (size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return static_cast<int64_t>(i);
  return -1;
}

BinaryHash HashIndex::hash(size_t pos) const {
  BinaryHash h;
  h.image_id = ids_[pos];
  h.n_bits = n_bits_;
  auto c = code(pos);
  h.bits.assign(c.begin(), c.end());
  return h;
}

void HashIndex::save(const std::string& path) const {
  BinWriter w(path);
  w.bytes("NIPH", 4);
  w.u32(kVersion);
  w.u64(ids_.size());
  w.u32(n_bits_);
  meta_.write(w);
  uint64_t index_bytes = 0;
  for (const auto& id : ids_) index_bytes += 2 + id.size() + 8;
  uint64_t payload = w.tell() + index_bytes;
  for (size_t i = 0; i < ids_.size(); ++i) {
    w.str(ids_[i]);
    w.u64(payload + i * static_cast<uint64_t>(stride()));
  }
  w.bytes(codes_.data(), codes_.size());
  w.close();
}

HashIndex HashIndex::load(const std::string& path) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "NIPH", 4) != 0)
    throw CorruptStore("'" + path + "' is not a NIPH hash file");
  if (r.u32() != kVersion) throw CorruptStore("unsupported NIPH version");
  uint64_t n = r.u64();
  HashIndex t;
  t.n_bits_ = r.u32();
  t.meta_ = Metadata::read(r);
  std::vector<uint64_t> offsets;
  for (uint64_t i = 0; i < n; ++i) {
    t.ids_.push_back(r.str());
    offsets.push_back(r.u64());
  }
  t.codes_.resize(n * t.stride());
  for (uint64_t i = 0; i < n; ++i) {
    if (offsets[i] + t.stride() > r.size())
      throw CorruptStore("hash payload of '" + t.ids_[i] +
                         "' extends past end of file");
    r.seek(offsets[i]);
    r.bytes(t.codes_.data() + i * t.stride(), t.stride());
  }
  return t;
}

}  // namespace nip
