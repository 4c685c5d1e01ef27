#include <algorithm>
#include <cstring>

#include "nip/kernels.hpp"

namespace nip::kernels {

namespace {

uint64_t hamming_scalar(const uint8_t* a, const uint8_t* b, size_t nbytes) {
  uint64_t sum = 0;
  size_t i = 0;
  for (; i + 8 <= nbytes; i += 8) {
    uint64_t wa, wb;
    std::memcpy(&wa, a + i, 8);
    std::memcpy(&wb, b + i, 8);
    sum += static_cast<uint64_t>(__builtin_popcountll(wa ^ wb));
  }
  for (; i < nbytes; ++i)
    sum += static_cast<uint64_t>(__builtin_popcount(
        static_cast<unsigned>(a[i] ^ b[i])));
  return sum;
}

void hamming_scan_scalar(const uint8_t* query, const uint8_t* db,
                         size_t code_bytes, size_t count, uint32_t* out) {
  for (size_t i = 0; i < count; ++i)
    out[i] = static_cast<uint32_t>(
        hamming_scalar(query, db + i * code_bytes, code_bytes));
}

double l2sq_scalar(const float* a, const float* b, size_t n) {
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

double reduce_sum_scalar(const float* v, size_t n) {
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) sum += static_cast<double>(v[i]);
  return sum;
}

float reduce_max_scalar(const float* v, size_t n) {
  float m = v[0];
  for (size_t i = 1; i < n; ++i) m = std::max(m, v[i]);
  return m;
}

double reduce_sumsq_scaled_scalar(const float* v, size_t n, double scale) {
  double s = static_cast<double>(scale);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(v[i]) * s;
    sum += t * t;
  }
  return sum;
}

void acc_sum_scalar(double* acc, const float* v, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(v[i]);
}

void acc_max_scalar(float* acc, const float* v, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] = std::max(acc[i], v[i]);
}

void acc_sumsq_scaled_scalar(double* acc, const float* v, const double* inv_max,
                             size_t n) {
  for (size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(v[i]) * static_cast<double>(inv_max[i]);
    acc[i] += t * t;
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table = {
      "scalar",
      hamming_scalar,
      hamming_scan_scalar,
      l2sq_scalar,
      reduce_sum_scalar,
      reduce_max_scalar,
      reduce_sumsq_scaled_scalar,
      acc_sum_scalar,
      acc_max_scalar,
      acc_sumsq_scaled_scalar,
  };
  return table;
}

}  // namespace nip::kernels
