#include "nip/pooling.hpp"

#include <algorithm>
#include <cmath>

#include "nip/kernels.hpp"

namespace nip {

using kernels::KernelTable;

PoolOrder PoolOrder::finite(uint32_t n) {
  if (n < 1) throw ValidationError("finite pooling order must be >= 1");
  return PoolOrder(n);
}

uint32_t PoolOrder::order() const {
  if (infinite()) throw ValidationError("infinite order has no finite n");
  return n_;
}

const char* axis_name(GroupAxis a) {
  switch (a) {
    case GroupAxis::Rotation: return "rotation";
    case GroupAxis::Scale: return "scale";
    case GroupAxis::Translation: return "translation";
  }
  return "?";
}

std::string PoolSequence::str() const {
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i) out += ',';
    const PoolStep& st = steps[i];
    if (st.order.infinite())
      out += 'M';
    else if (st.order.order() == 1)
      out += 'A';
    else if (st.order.order() == 2)
      out += 'S';
    else
      out += "P" + std::to_string(st.order.order());
    out += '_';
    switch (st.axis) {
      case GroupAxis::Rotation: out += 'R'; break;
      case GroupAxis::Scale: out += 'S'; break;
      case GroupAxis::Translation: out += 'T'; break;
    }
  }
  return out;
}

PoolSequence parse_sequence(const std::string& s) {
  PoolSequence seq;
  bool used[3] = {false, false, false};
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string tok = s.substr(pos, comma - pos);
    // trim surrounding whitespace
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t'))
      tok.erase(tok.begin());
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t'))
      tok.pop_back();
    if (tok.size() != 3 || tok[1] != '_')
      throw ParseError("bad pooling token '" + tok + "' (want e.g. A_S)");
    PoolOrder order = PoolOrder::infinity();
    switch (tok[0]) {
      case 'A': order = PoolOrder::finite(1); break;
      case 'S': order = PoolOrder::finite(2); break;
      case 'M': order = PoolOrder::infinity(); break;
      default:
        throw ParseError("unknown moment letter '" + tok.substr(0, 1) +
                         "' in '" + tok + "'");
    }
    GroupAxis axis;
    switch (tok[2]) {
      case 'R': axis = GroupAxis::Rotation; break;
      case 'S': axis = GroupAxis::Scale; break;
      case 'T': axis = GroupAxis::Translation; break;
      default:
        throw ParseError("unknown axis letter '" + tok.substr(2, 1) +
                         "' in '" + tok + "'");
    }
    if (used[static_cast<int>(axis)])
      throw ParseError("axis repeated in sequence: " + tok);
    used[static_cast<int>(axis)] = true;
    seq.steps.push_back({axis, order});
    if (comma == s.size()) break;
    pos = comma + 1;
  }
  if (seq.steps.empty()) throw ParseError("empty pooling sequence");
  return seq;
}

namespace {

// shared scalar path once min/max of the samples are known
template <typename T>
double pooled_value(const T* v, size_t m, size_t stride, PoolOrder order,
                    double vmin, double vmax) {
  if (vmin == vmax) return vmin;  // power mean of a constant is the constant
  if (order.infinite()) return vmax;
  uint32_t n = order.order();
  if (n == 1) {
    double sum = 0.0;
    for (size_t j = 0; j < m; ++j) sum += static_cast<double>(v[j * stride]);
    return sum / static_cast<double>(m);
  }
  // max-factored form keeps v^n in range for large n
  double inv = 1.0 / vmax;
  double sum = 0.0;
  if (n == 2) {
    for (size_t j = 0; j < m; ++j) {
      double t = static_cast<double>(v[j * stride]) * inv;
      sum += t * t;
    }
    return vmax * std::sqrt(sum / static_cast<double>(m));
  }
  for (size_t j = 0; j < m; ++j)
    sum += std::pow(static_cast<double>(v[j * stride]) * inv,
                    static_cast<double>(n));
  return vmax * std::pow(sum / static_cast<double>(m),
                         1.0 / static_cast<double>(n));
}

template <typename T>
double moment_pool_checked(std::span<const T> values, PoolOrder order) {
  if (values.empty()) throw EmptyOrbit("moment_pool of zero samples");
  double vmin = static_cast<double>(values[0]);
  double vmax = vmin;
  for (T x : values) {
    double v = static_cast<double>(x);
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("moment_pool requires finite non-negative samples");
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  return pooled_value(values.data(), values.size(), 1, order, vmin, vmax);
}

}  // namespace

double moment_pool(std::span<const float> values, PoolOrder order) {
  return moment_pool_checked(values, order);
}

double moment_pool(std::span<const double> values, PoolOrder order) {
  return moment_pool_checked(values, order);
}

PoolTensor::PoolTensor(const OrbitTensor& t, bool validate) {
  if (validate) check_orbit_invariants(t);
  dims_[0] = t.shape.n_rot;
  dims_[1] = t.shape.n_scale;
  dims_[2] = t.shape.channels;
  dims_[3] = static_cast<uint64_t>(t.shape.height) * t.shape.width;
  f32_ = t.data;
}

bool PoolTensor::collapsed(GroupAxis axis) const {
  switch (axis) {
    case GroupAxis::Rotation: return collapsed_[0];
    case GroupAxis::Scale: return collapsed_[1];
    case GroupAxis::Translation: return collapsed_[3];
  }
  return false;
}

double PoolTensor::at(uint64_t r, uint64_t s, uint64_t c, uint64_t t) const {
  uint64_t idx = ((r * dims_[1] + s) * dims_[2] + c) * dims_[3] + t;
  return first_step_done_ ? f64_[idx] : static_cast<double>(f32_[idx]);
}

void PoolTensor::pool_axis(GroupAxis axis, PoolOrder order) {
  size_t a = axis == GroupAxis::Rotation ? 0
             : axis == GroupAxis::Scale  ? 1
                                         : 3;
  if (collapsed_[a])
    throw AxisReused(std::string(axis_name(axis)) + " axis already pooled");
  if (!first_step_done_)
    pool_f32(a, order);
  else
    pool_f64(a, order);
  dims_[a] = 1;
  collapsed_[a] = true;
  first_step_done_ = true;
  f32_.clear();
  f32_.shrink_to_fit();
}

// First step runs on the raw float32 orbit through the SIMD-dispatched
// kernels; later steps work on the much smaller f64 buffer.
void PoolTensor::pool_f32(size_t a, PoolOrder order) {
  const KernelTable& k = kernels::active();
  const uint64_t m = dims_[a];
  uint64_t outer = 1, inner = 1;
  for (size_t i = 0; i < a; ++i) outer *= dims_[i];
  for (size_t i = a + 1; i < 4; ++i) inner *= dims_[i];
  f64_.assign(outer * inner, 0.0);
  const float* src = f32_.data();

  if (inner == 1) {
    // trailing axis: contiguous horizontal reductions per cell
    for (uint64_t o = 0; o < outer; ++o) {
      const float* v = src + o * m;
      if (order.infinite()) {
        f64_[o] = static_cast<double>(k.reduce_max(v, m));
        continue;
      }
      if (order.order() == 1) {
        f64_[o] = k.reduce_sum(v, m) / static_cast<double>(m);
        continue;
      }
      float mx = k.reduce_max(v, m);
      if (mx == 0.0f) {
        f64_[o] = 0.0;
      } else if (order.order() == 2) {
        double inv = 1.0 / static_cast<double>(mx);
        f64_[o] = static_cast<double>(mx) *
                  std::sqrt(k.reduce_sumsq_scaled(v, m, inv) /
                            static_cast<double>(m));
      } else {
        double inv = 1.0 / static_cast<double>(mx);
        double sum = 0.0;
        for (uint64_t j = 0; j < m; ++j)
          sum += std::pow(static_cast<double>(v[j]) * inv,
                          static_cast<double>(order.order()));
        f64_[o] = static_cast<double>(mx) *
                  std::pow(sum / static_cast<double>(m),
                           1.0 / static_cast<double>(order.order()));
      }
    }
    return;
  }

  // leading axis: vertical slab accumulation across cells
  for (uint64_t o = 0; o < outer; ++o) {
    const float* base = src + o * m * inner;
    double* out = f64_.data() + o * inner;
    if (order.infinite()) {
      std::vector<float> mx(inner, 0.0f);  // samples are >= 0
      for (uint64_t j = 0; j < m; ++j) k.acc_max(mx.data(), base + j * inner, inner);
      for (uint64_t i = 0; i < inner; ++i) out[i] = static_cast<double>(mx[i]);
    } else if (order.order() == 1) {
      for (uint64_t j = 0; j < m; ++j) k.acc_sum(out, base + j * inner, inner);
      for (uint64_t i = 0; i < inner; ++i) out[i] /= static_cast<double>(m);
    } else if (order.order() == 2) {
      std::vector<float> mx(inner, 0.0f);
      for (uint64_t j = 0; j < m; ++j) k.acc_max(mx.data(), base + j * inner, inner);
      std::vector<double> inv(inner);
      for (uint64_t i = 0; i < inner; ++i)
        inv[i] = mx[i] > 0.0f ? 1.0 / static_cast<double>(mx[i]) : 0.0;
      for (uint64_t j = 0; j < m; ++j)
        k.acc_sumsq_scaled(out, base + j * inner, inv.data(), inner);
      for (uint64_t i = 0; i < inner; ++i)
        out[i] = static_cast<double>(mx[i]) *
                 std::sqrt(out[i] / static_cast<double>(m));
    } else {
      const double n = static_cast<double>(order.order());
      for (uint64_t i = 0; i < inner; ++i) {
        double mx = 0.0, sum = 0.0;
        for (uint64_t j = 0; j < m; ++j)
          mx = std::max(mx, static_cast<double>(base[j * inner + i]));
        if (mx == 0.0) {
          out[i] = 0.0;
          continue;
        }
        double invm = 1.0 / mx;
        for (uint64_t j = 0; j < m; ++j)
          sum += std::pow(static_cast<double>(base[j * inner + i]) * invm, n);
        out[i] = mx * std::pow(sum / static_cast<double>(m), 1.0 / n);
      }
    }
  }
}

void PoolTensor::pool_f64(size_t a, PoolOrder order) {
  const uint64_t m = dims_[a];
  uint64_t outer = 1, inner = 1;
  for (size_t i = 0; i < a; ++i) outer *= dims_[i];
  for (size_t i = a + 1; i < 4; ++i) inner *= dims_[i];
  std::vector<double> out(outer * inner);
  for (uint64_t o = 0; o < outer; ++o) {
    const double* base = f64_.data() + o * m * inner;
    for (uint64_t i = 0; i < inner; ++i) {
      const double* v = base + i;
      double vmin = v[0], vmax = v[0];
      for (uint64_t j = 1; j < m; ++j) {
        double x = v[j * inner];
        vmin = std::min(vmin, x);
        vmax = std::max(vmax, x);
      }
      out[o * inner + i] = pooled_value(v, m, inner, order, vmin, vmax);
    }
  }
  f64_ = std::move(out);
}

std::vector<float> PoolTensor::flatten_channel_major() const {
  std::vector<float> out;
  out.reserve(cells());
  const uint64_t R = dims_[0], S = dims_[1], C = dims_[2], T = dims_[3];
  for (uint64_t c = 0; c < C; ++c)
    for (uint64_t r = 0; r < R; ++r)
      for (uint64_t s = 0; s < S; ++s)
        for (uint64_t t = 0; t < T; ++t)
          out.push_back(static_cast<float>(at(r, s, c, t)));
  return out;
}

Descriptor nip_descriptor(const OrbitTensor& t, const PoolSequence& seq) {
  if (seq.steps.empty()) throw ParseError("empty pooling sequence");
  PoolTensor pt(t);
  for (const PoolStep& st : seq.steps) pt.pool_axis(st.axis, st.order);
  Descriptor d;
  d.image_id = t.image_id;
  d.sequence = seq.str();
  d.values = pt.flatten_channel_major();
  return d;
}

}  // namespace nip
