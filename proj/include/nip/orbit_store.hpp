#pragma once

// On-disk container for per-image feature-map orbits ("NIPO" format) and the
// retrieval ground-truth sidecar (TSV).
//
// Layout, all integers little-endian:
//   magic "NIPO" | version u32 | n_images u64 | n_rot,n_scale,C,H,W u32 |
//   dtype u8 (0 = float32 LE) | metadata (u32 len + key=value lines) |
//   index: n_images x (id: u16 len + bytes, payload offset u64), sorted by id |
//   payloads: row-major [rot][scale][channel][row][col] float32, contiguous.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nip/binio.hpp"

namespace nip {

struct OrbitShape {
  uint32_t n_rot = 0;
  uint32_t n_scale = 0;
  uint32_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;

  uint64_t elements() const {
    return static_cast<uint64_t>(n_rot) * n_scale * channels * height * width;
  }
  bool operator==(const OrbitShape&) const = default;
  std::string str() const;
};

struct OrbitTensor {
  std::string image_id;
  OrbitShape shape;
  std::vector<float> data;  // row-major [rot][scale][channel][row][col]
};

// Throws ValidationError naming the first offending flat index.
void check_orbit_invariants(const OrbitTensor& t);

void write_store(const std::vector<OrbitTensor>& records,
                 const std::string& path, const Metadata& meta = {});

// Streaming variant: `fill` produces the payload for each id; records are
// written in sorted-id order with one payload in memory at a time.
void write_store(const std::string& path, const OrbitShape& shape,
                 const std::vector<std::string>& ids,
                 const std::function<void(const std::string& id,
                                          std::vector<float>& out)>& fill,
                 const Metadata& meta = {});

struct ValidationReport;
ValidationReport validate_store(const std::string& path);

class OrbitStore {
 public:
  explicit OrbitStore(const std::string& path);
  ~OrbitStore();
  OrbitStore(const OrbitStore&) = delete;
  OrbitStore& operator=(const OrbitStore&) = delete;

  const OrbitShape& shape() const { return shape_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const Metadata& metadata() const { return meta_; }
  size_t size() const { return ids_.size(); }
  bool contains(const std::string& image_id) const;

  // Payload reads use positioned I/O; safe to call concurrently.
  OrbitTensor read_orbit(const std::string& image_id) const;
  // Reads by index position (ids() order); avoids the id lookup.
  OrbitTensor read_orbit_at(size_t pos) const;

 private:
  int fd_ = -1;
  uint64_t file_size_ = 0;
  OrbitShape shape_;
  Metadata meta_;
  std::vector<std::string> ids_;
  std::vector<uint64_t> offsets_;
  uint64_t header_n_images_ = 0;

  friend ValidationReport validate_store(const std::string& path);
};

struct Finding {
  std::string record_id;  // empty for header-level findings
  std::string check;      // "header", "shape", "finite", "non-negative"
  std::string detail;
  int64_t flat_index = -1;
};

struct ValidationReport {
  bool passed = false;
  size_t records_checked = 0;
  std::vector<Finding> findings;
  std::string str() const;
};

struct GroundTruth {
  struct Query {
    std::string query_id;
    std::vector<std::string> relevant;  // deduplicated, sorted
  };
  std::vector<Query> queries;
};

GroundTruth load_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& gt, const std::string& path);

}  // namespace nip
