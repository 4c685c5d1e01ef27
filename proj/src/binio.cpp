#include "nip/binio.hpp"

#include <cerrno>
#include <cstring>

namespace nip {

namespace {

void encode_le(uint64_t v, uint8_t* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint64_t decode_le(const uint8_t* in, size_t n) {
  uint64_t v = 0;
  for (size_t i = 0; i < n; ++i) v |= static_cast<uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace

BinWriter::BinWriter(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
}

BinWriter::~BinWriter() {
  if (f_) std::fclose(f_);
}

void BinWriter::close() {
  if (f_) {
    if (std::fclose(f_) != 0) {
      f_ = nullptr;
      throw IoError("close failed for '" + path_ + "'");
    }
    f_ = nullptr;
  }
}

void BinWriter::bytes(const void* data, size_t n) {
  if (n == 0) return;
  if (std::fwrite(data, 1, n, f_) != n)
    throw IoError("short write to '" + path_ + "'");
  offset_ += n;
}

void BinWriter::u8(uint8_t v) { bytes(&v, 1); }

void BinWriter::u16(uint16_t v) {
  uint8_t b[2];
  encode_le(v, b, 2);
  bytes(b, 2);
}

void BinWriter::u32(uint32_t v) {
  uint8_t b[4];
  encode_le(v, b, 4);
  bytes(b, 4);
}

void BinWriter::u64(uint64_t v) {
  uint8_t b[8];
  encode_le(v, b, 8);
  bytes(b, 8);
}

void BinWriter::f32(float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  u32(u);
}

void BinWriter::f64(double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  u64(u);
}

void BinWriter::f32_array(const float* data, size_t n) {
  static_assert(sizeof(float) == 4);
  // Host is little-endian on every supported target; bulk write.
  bytes(data, n * 4);
}

void BinWriter::f64_array(const double* data, size_t n) {
  bytes(data, n * 8);
}

void BinWriter::str(const std::string& s) {
  if (s.size() > 0xFFFF) throw ValidationError("string too long for u16 length prefix");
  u16(static_cast<uint16_t>(s.size()));
  bytes(s.data(), s.size());
}

BinReader::BinReader(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "rb");
  if (!f_) throw IoError("cannot open '" + path + "': " + std::strerror(errno));
  std::fseek(f_, 0, SEEK_END);
  size_ = static_cast<uint64_t>(std::ftell(f_));
  std::fseek(f_, 0, SEEK_SET);
}

BinReader::~BinReader() {
  if (f_) std::fclose(f_);
}

void BinReader::bytes(void* out, size_t n) {
  if (n == 0) return;
  if (std::fread(out, 1, n, f_) != n)
    throw CorruptStore("unexpected end of file in '" + path_ + "'");
  offset_ += n;
}

uint8_t BinReader::u8() {
  uint8_t v;
  bytes(&v, 1);
  return v;
}

uint16_t BinReader::u16() {
  uint8_t b[2];
  bytes(b, 2);
  return static_cast<uint16_t>(decode_le(b, 2));
}

uint32_t BinReader::u32() {
  uint8_t b[4];
  bytes(b, 4);
  return static_cast<uint32_t>(decode_le(b, 4));
}

uint64_t BinReader::u64() {
  uint8_t b[8];
  bytes(b, 8);
  return decode_le(b, 8);
}

float BinReader::f32() {
  uint32_t u = u32();
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

double BinReader::f64() {
  uint64_t u = u64();
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void BinReader::f32_array(float* out, size_t n) { bytes(out, n * 4); }

void BinReader::f64_array(double* out, size_t n) { bytes(out, n * 8); }

std::string BinReader::str() {
  uint16_t len = u16();
  std::string s(len, '\0');
  bytes(s.data(), len);
  return s;
}

void BinReader::seek(uint64_t off) {
  if (off > size_) throw CorruptStore("seek past end of '" + path_ + "'");
  if (std::fseek(f_, static_cast<long>(off), SEEK_SET) != 0)
    throw IoError("seek failed in '" + path_ + "'");
  offset_ = off;
}

void Metadata::set(const std::string& key, const std::string& value) {
  for (auto& kv : entries_) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Metadata::set(const std::string& key, uint64_t value) {
  set(key, std::to_string(value));
}

void Metadata::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  set(key, std::string(buf));
}

const std::string* Metadata::find(const std::string& key) const {
  for (const auto& kv : entries_)
    if (kv.first == key) return &kv.second;
  return nullptr;
}

std::string Metadata::serialize() const {
  std::string out;
  for (const auto& kv : entries_) {
    out += kv.first;
    out += '=';
    out += kv.second;
    out += '\n';
  }
  return out;
}

Metadata Metadata::parse(const std::string& text) {
  Metadata m;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("metadata line without '=': " + line);
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

void Metadata::write(BinWriter& w) const {
  std::string s = serialize();
  w.u32(static_cast<uint32_t>(s.size()));
  w.bytes(s.data(), s.size());
}

Metadata Metadata::read(BinReader& r) {
  uint32_t len = r.u32();
  std::string s(len, '\0');
  r.bytes(s.data(), len);
  return parse(s);
}

uint64_t fnv1a_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "' for digest");
  uint64_t h = 0xcbf29ce484222325ull;
  std::vector<uint8_t> buf(1 << 16);
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) {
    for (size_t i = 0; i < n; ++i) {
      h ^= buf[i];
      h *= 0x100000001b3ull;
    }
  }
  std::fclose(f);
  return h;
}

std::string digest_hex(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return std::string(buf);
}

}  // namespace nip
