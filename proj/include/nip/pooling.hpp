#pragma once

// Moment pooling over transformation-group axes and nested chains of such
// poolings. A pooling step collapses one group axis of the orbit tensor by
// the n-th power mean of its samples: (1/m * sum v^n)^(1/n), with n = 1 the
// average, n = 2 the RMS and n -> infinity exact max. Chaining steps across
// axes yields the nested-invariance descriptor; the channel axis is never
// pooled and the remaining cells are flattened channel-major.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nip/descriptor.hpp"
#include "nip/orbit_store.hpp"

namespace nip {

class PoolOrder {
 public:
  static PoolOrder finite(uint32_t n);
  static PoolOrder infinity() { return PoolOrder(0); }

  bool infinite() const { return n_ == 0; }
  uint32_t order() const;  // finite orders only
  std::string str() const { return infinite() ? "inf" : std::to_string(n_); }
  bool operator==(const PoolOrder&) const = default;

 private:
  explicit PoolOrder(uint32_t n) : n_(n) {}
  uint32_t n_;  // 0 encodes infinity
};

enum class GroupAxis { Rotation, Scale, Translation };

const char* axis_name(GroupAxis a);

struct PoolStep {
  GroupAxis axis;
  PoolOrder order;
};

struct PoolSequence {
  std::vector<PoolStep> steps;
  std::string str() const;  // canonical "A_S,S_T,M_R" form
};

// "A_S,S_T,M_R" -> [(Scale,1),(Translation,2),(Rotation,inf)].
// Moment letters: A = order 1, S = order 2, M = max. Axis letters:
// R = rotation, S = scale, T = translation. A repeated axis is an error.
PoolSequence parse_sequence(const std::string& s);

// n-th power mean of non-negative samples; infinity = max. Result lies in
// [min(values), max(values)] and equals the constant for constant input.
double moment_pool(std::span<const float> values, PoolOrder order);
double moment_pool(std::span<const double> values, PoolOrder order);

// Orbit tensor in the middle of a pooling chain. Translation collapses the
// row and column dimensions jointly (one axis of H*W samples); the channel
// axis survives every step.
class PoolTensor {
 public:
  explicit PoolTensor(const OrbitTensor& t, bool validate = true);

  void pool_axis(GroupAxis axis, PoolOrder order);  // AxisReused if collapsed

  bool collapsed(GroupAxis axis) const;
  // surviving extents: rotation, scale, channel, spatial
  uint64_t rot() const { return dims_[0]; }
  uint64_t scale() const { return dims_[1]; }
  uint64_t channels() const { return dims_[2]; }
  uint64_t spatial() const { return dims_[3]; }
  uint64_t cells() const { return dims_[0] * dims_[1] * dims_[2] * dims_[3]; }

  double at(uint64_t r, uint64_t s, uint64_t c, uint64_t t) const;

  // channel-major flatten of whatever survives; dim = C * rot * scale * spatial
  std::vector<float> flatten_channel_major() const;

 private:
  uint64_t dims_[4];  // rot, scale, channel, spatial
  bool collapsed_[4] = {false, false, false, false};
  bool first_step_done_ = false;
  std::vector<float> f32_;   // initial orbit values
  std::vector<double> f64_;  // working buffer after the first step

  void pool_f32(size_t axis, PoolOrder order);
  void pool_f64(size_t axis, PoolOrder order);
};

Descriptor nip_descriptor(const OrbitTensor& t, const PoolSequence& seq);

}  // namespace nip
