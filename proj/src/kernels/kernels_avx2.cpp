// AVX2 kernel variants. This translation unit is compiled with -mavx2
// -mpopcnt on x86-64 only; entry is gated behind a runtime CPU check in
// dispatch.cpp.

#include "nip/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstring>

namespace nip::kernels {

namespace {

// nibble-LUT popcount of a 256-bit vector, returned as 4 u64 lane sums
inline __m256i popcount256(__m256i v) {
  const __m256i lookup =
      _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  __m256i lo = _mm256_and_si256(v, low_mask);
  __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo),
                                _mm256_shuffle_epi8(lookup, hi));
  return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

inline uint64_t hsum_u64(__m256i v) {
  __m128i lo = _mm256_castsi256_si128(v);
  __m128i hi = _mm256_extracti128_si256(v, 1);
  __m128i s = _mm_add_epi64(lo, hi);
  return static_cast<uint64_t>(_mm_extract_epi64(s, 0)) +
         static_cast<uint64_t>(_mm_extract_epi64(s, 1));
}

uint64_t hamming_avx2(const uint8_t* a, const uint8_t* b, size_t nbytes) {
  __m256i acc = _mm256_setzero_si256();
  size_t i = 0;
  for (; i + 32 <= nbytes; i += 32) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    acc = _mm256_add_epi64(acc, popcount256(_mm256_xor_si256(va, vb)));
  }
  uint64_t sum = hsum_u64(acc);
  for (; i + 8 <= nbytes; i += 8) {
    uint64_t wa, wb;
    std::memcpy(&wa, a + i, 8);
    std::memcpy(&wb, b + i, 8);
    sum += static_cast<uint64_t>(_mm_popcnt_u64(wa ^ wb));
  }
  for (; i < nbytes; ++i)
    sum += static_cast<uint64_t>(
        _mm_popcnt_u32(static_cast<unsigned>(a[i] ^ b[i])));
  return sum;
}

void hamming_scan_avx2(const uint8_t* query, const uint8_t* db,
                       size_t code_bytes, size_t count, uint32_t* out) {
  for (size_t i = 0; i < count; ++i)
    out[i] =
        static_cast<uint32_t>(hamming_avx2(query, db + i * code_bytes, code_bytes));
}

inline double hsum_f64(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double l2sq_avx2(const float* a, const float* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    __m256d d = _mm256_sub_pd(va, vb);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = hsum_f64(acc);
  for (; i < n; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

double reduce_sum_avx2(const float* v, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(v + i)));
  double sum = hsum_f64(acc);
  for (; i < n; ++i) sum += static_cast<double>(v[i]);
  return sum;
}

float reduce_max_avx2(const float* v, size_t n) {
  size_t i = 0;
  float m = v[0];
  if (n >= 8) {
    __m256 acc = _mm256_loadu_ps(v);
    for (i = 8; i + 8 <= n; i += 8)
      acc = _mm256_max_ps(acc, _mm256_loadu_ps(v + i));
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 s = _mm_max_ps(lo, hi);
    s = _mm_max_ps(s, _mm_movehl_ps(s, s));
    s = _mm_max_ss(s, _mm_shuffle_ps(s, s, 1));
    m = _mm_cvtss_f32(s);
  }
  for (; i < n; ++i) m = std::max(m, v[i]);
  return m;
}

double reduce_sumsq_scaled_avx2(const float* v, size_t n, double scale) {
  const __m256d vs = _mm256_set1_pd(static_cast<double>(scale));
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_cvtps_pd(_mm_loadu_ps(v + i)), vs);
    acc = _mm256_fmadd_pd(t, t, acc);
  }
  double sum = hsum_f64(acc);
  double s = static_cast<double>(scale);
  for (; i < n; ++i) {
    double t = static_cast<double>(v[i]) * s;
    sum += t * t;
  }
  return sum;
}

// vertical ops: one operation per cell, bit-identical to scalar

void acc_sum_avx2(double* acc, const float* v, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(acc + i);
    a = _mm256_add_pd(a, _mm256_cvtps_pd(_mm_loadu_ps(v + i)));
    _mm256_storeu_pd(acc + i, a);
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(v[i]);
}

void acc_max_avx2(float* acc, const float* v, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 a = _mm256_loadu_ps(acc + i);
    a = _mm256_max_ps(a, _mm256_loadu_ps(v + i));
    _mm256_storeu_ps(acc + i, a);
  }
  for (; i < n; ++i) acc[i] = std::max(acc[i], v[i]);
}

void acc_sumsq_scaled_avx2(double* acc, const float* v, const double* inv_max,
                           size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_cvtps_pd(_mm_loadu_ps(v + i)),
                              _mm256_loadu_pd(inv_max + i));
    __m256d a = _mm256_loadu_pd(acc + i);
    // mul then add (no FMA) so rounding matches the scalar reference exactly
    a = _mm256_add_pd(a, _mm256_mul_pd(t, t));
    _mm256_storeu_pd(acc + i, a);
  }
  for (; i < n; ++i) {
    double t = static_cast<double>(v[i]) * static_cast<double>(inv_max[i]);
    acc[i] += t * t;
  }
}

}  // namespace

namespace detail {

const KernelTable& avx2_table() {
  static const KernelTable table = {
      "avx2",
      hamming_avx2,
      hamming_scan_avx2,
      l2sq_avx2,
      reduce_sum_avx2,
      reduce_max_avx2,
      reduce_sumsq_scaled_avx2,
      acc_sum_avx2,
      acc_max_avx2,
      acc_sumsq_scaled_avx2,
  };
  return table;
}

}  // namespace detail

}  // namespace nip::kernels

#endif  // x86-64
