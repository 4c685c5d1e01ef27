#pragma once

// Descriptor and binary-hash containers plus their file formats.
//
// Descriptor file ("NIPD"): magic | version u32 | N u64 | dim u32 | dtype u8
//   (0 = float32 LE) | metadata | index (id, offset u64) | row payloads.
// Hash file ("NIPH"): magic | version u32 | N u64 | n_bits u32 | metadata |
//   index (id, offset u64) | packed codes, stride = ceil(n_bits/8) bytes.
// Bit packing is LSB-first within each byte; padding bits are zero.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nip/binio.hpp"

namespace nip {

struct Descriptor {
  std::string image_id;
  std::string sequence;  // provenance: pooling recipe that produced it
  std::vector<float> values;

  size_t dim() const { return values.size(); }
};

class DescriptorTable {
 public:
  DescriptorTable() = default;
  explicit DescriptorTable(uint32_t dim) : dim_(dim) {}

  uint32_t dim() const { return dim_; }
  size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  Metadata& metadata() { return meta_; }
  const Metadata& metadata() const { return meta_; }

  void add(const std::string& id, std::span<const float> values);
  void add(const Descriptor& d) { add(d.image_id, d.values); }

  std::span<const float> row(size_t pos) const;
  std::span<float> row_mut(size_t pos);
  // -1 when absent
  int64_t find(const std::string& id) const;
  Descriptor descriptor(size_t pos) const;

  void save(const std::string& path) const;
  static DescriptorTable load(const std::string& path);

 private:
  uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;  // N x dim row-major
  Metadata meta_;
};

struct BinaryHash {
  std::string image_id;
  uint32_t n_bits = 0;
  std::vector<uint8_t> bits;  // ceil(n_bits/8) bytes, padding zero

  static BinaryHash zeros(const std::string& id, uint32_t n_bits);
  bool get(uint32_t j) const { return (bits[j >> 3] >> (j & 7)) & 1; }
  void set(uint32_t j, bool v) {
    if (v)
      bits[j >> 3] |= static_cast<uint8_t>(1u << (j & 7));
    else
      bits[j >> 3] &= static_cast<uint8_t>(~(1u << (j & 7)));
  }
};

// Database side of Hamming retrieval: ids plus contiguous packed codes with a
// fixed per-item stride.
class HashIndex {
 public:
  HashIndex() = default;
  explicit HashIndex(uint32_t n_bits) : n_bits_(n_bits) {}

  uint32_t n_bits() const { return n_bits_; }
  uint32_t stride() const { return (n_bits_ + 7) / 8; }
  size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  Metadata& metadata() { return meta_; }
  const Metadata& metadata() const { return meta_; }

  void add(const BinaryHash& h);
  std::span<const uint8_t> code(size_t pos) const;
  const uint8_t* codes() const { return codes_.data(); }
  int64_t find(const std::string& id) const;
  BinaryHash hash(size_t pos) const;

  void save(const std::string& path) const;
  static HashIndex load(const std::string& path);

 private:
  uint32_t n_bits_ = 0;
  std::vector<std::string> ids_;
  std::vector<uint8_t> codes_;
  Metadata meta_;
};

}  // namespace nip
