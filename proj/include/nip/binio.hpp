#pragma once

// Little-endian binary file primitives shared by the NIPO/NIPD/NIPH/NIPR/NIPM
// container formats, plus the FNV-1a digest used for provenance metadata.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "nip/errors.hpp"

namespace nip {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  ~BinWriter();
  BinWriter(const BinWriter&) = delete;
  BinWriter& operator=(const BinWriter&) = delete;

  void u8(uint8_t v);
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* data, size_t n);
  void f32_array(const float* data, size_t n);
  void f64_array(const double* data, size_t n);
  // length-prefixed (u16) UTF-8 string
  void str(const std::string& s);

  uint64_t tell() const { return offset_; }
  void close();

 private:
  std::FILE* f_;
  std::string path_;
  uint64_t offset_ = 0;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  ~BinReader();
  BinReader(const BinReader&) = delete;
  BinReader& operator=(const BinReader&) = delete;

  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  float f32();
  double f64();
  void bytes(void* out, size_t n);
  void f32_array(float* out, size_t n);
  void f64_array(double* out, size_t n);
  std::string str();

  void seek(uint64_t off);
  uint64_t tell() const { return offset_; }
  uint64_t size() const { return size_; }

 private:
  std::FILE* f_;
  std::string path_;
  uint64_t offset_ = 0;
  uint64_t size_ = 0;
};

// Ordered key=value metadata block embedded in every output file. Insertion
// order is preserved so identical configs serialize to identical bytes.
class Metadata {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, uint64_t value);
  void set(const std::string& key, double value);
  const std::string* find(const std::string& key) const;

  std::string serialize() const;             // "key=value\n" lines
  static Metadata parse(const std::string& text);

  void write(BinWriter& w) const;            // u32 length + bytes
  static Metadata read(BinReader& r);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// FNV-1a 64-bit over a file's bytes; provenance digest, not cryptographic.
uint64_t fnv1a_file(const std::string& path);
std::string digest_hex(uint64_t digest);

}  // namespace nip
