// NEON kernel variants for aarch64, where NEON is baseline and needs no
// runtime check. Kept to plain ld1/cnt/max/cvt intrinsics.

#include "nip/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <cstring>

namespace nip::kernels {

namespace {

uint64_t hamming_neon(const uint8_t* a, const uint8_t* b, size_t nbytes) {
  uint64_t sum = 0;
  size_t i = 0;
  for (; i + 16 <= nbytes; i += 16) {
    uint8x16_t va = vld1q_u8(a + i);
    uint8x16_t vb = vld1q_u8(b + i);
    uint8x16_t cnt = vcntq_u8(veorq_u8(va, vb));
    sum += vaddvq_u8(cnt);
  }
  for (; i < nbytes; ++i)
    sum += static_cast<uint64_t>(__builtin_popcount(
        static_cast<unsigned>(a[i] ^ b[i])));
  return sum;
}

void hamming_scan_neon(const uint8_t* query, const uint8_t* db,
                       size_t code_bytes, size_t count, uint32_t* out) {
  for (size_t i = 0; i < count; ++i)
    out[i] =
        static_cast<uint32_t>(hamming_neon(query, db + i * code_bytes, code_bytes));
}

double l2sq_neon(const float* a, const float* b, size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    float32x4_t vb = vld1q_f32(b + i);
    float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)),
                                vcvt_f64_f32(vget_low_f32(vb)));
    float64x2_t dhi = vsubq_f64(vcvt_f64_f32(vget_high_f32(va)),
                                vcvt_f64_f32(vget_high_f32(vb)));
    acc = vfmaq_f64(acc, dlo, dlo);
    acc = vfmaq_f64(acc, dhi, dhi);
  }
  double sum = vaddvq_f64(acc);
  for (; i < n; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

double reduce_sum_neon(const float* v, size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t x = vld1q_f32(v + i);
    acc = vaddq_f64(acc, vcvt_f64_f32(vget_low_f32(x)));
    acc = vaddq_f64(acc, vcvt_f64_f32(vget_high_f32(x)));
  }
  double sum = vaddvq_f64(acc);
  for (; i < n; ++i) sum += static_cast<double>(v[i]);
  return sum;
}

float reduce_max_neon(const float* v, size_t n) {
  size_t i = 0;
  float m = v[0];
  if (n >= 4) {
    float32x4_t acc = vld1q_f32(v);
    for (i = 4; i + 4 <= n; i += 4) acc = vmaxq_f32(acc, vld1q_f32(v + i));
    m = vmaxvq_f32(acc);
  }
  for (; i < n; ++i) m = std::max(m, v[i]);
  return m;
}

double reduce_sumsq_scaled_neon(const float* v, size_t n, double scale) {
  const float64x2_t vs = vdupq_n_f64(static_cast<double>(scale));
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t x = vld1q_f32(v + i);
    float64x2_t tlo = vmulq_f64(vcvt_f64_f32(vget_low_f32(x)), vs);
    float64x2_t thi = vmulq_f64(vcvt_f64_f32(vget_high_f32(x)), vs);
    acc = vfmaq_f64(acc, tlo, tlo);
    acc = vfmaq_f64(acc, thi, thi);
  }
  double sum = vaddvq_f64(acc);
  double s = static_cast<double>(scale);
  for (; i < n; ++i) {
    double t = static_cast<double>(v[i]) * s;
    sum += t * t;
  }
  return sum;
}

void acc_sum_neon(double* acc, const float* v, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t a = vld1q_f64(acc + i);
    a = vaddq_f64(a, vcvt_f64_f32(vld1_f32(v + i)));
    vst1q_f64(acc + i, a);
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(v[i]);
}

void acc_max_neon(float* acc, const float* v, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t a = vld1q_f32(acc + i);
    a = vmaxq_f32(a, vld1q_f32(v + i));
    vst1q_f32(acc + i, a);
  }
  for (; i < n; ++i) acc[i] = std::max(acc[i], v[i]);
}

void acc_sumsq_scaled_neon(double* acc, const float* v, const double* inv_max,
                           size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vcvt_f64_f32(vld1_f32(v + i)),
                              vld1q_f64(inv_max + i));
    float64x2_t a = vld1q_f64(acc + i);
    // mul then add (no FMA) so rounding matches the scalar reference exactly
    a = vaddq_f64(a, vmulq_f64(t, t));
    vst1q_f64(acc + i, a);
  }
  for (; i < n; ++i) {
    double t = static_cast<double>(v[i]) * static_cast<double>(inv_max[i]);
    acc[i] += t * t;
  }
}

}  // namespace

namespace detail {

const KernelTable& neon_table() {
  static const KernelTable table = {
      "neon",
      hamming_neon,
      hamming_scan_neon,
      l2sq_neon,
      reduce_sum_neon,
      reduce_max_neon,
      reduce_sumsq_scaled_neon,
      acc_sum_neon,
      acc_max_neon,
      acc_sumsq_scaled_neon,
  };
  return table;
}

}  // namespace detail

}  // namespace nip::kernels

#endif  // aarch64
