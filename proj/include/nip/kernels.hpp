#pragma once

// Data-parallel inner loops behind pooling, L2 ranking and Hamming scans.
// Scalar reference implementations always exist; AVX2 (x86-64) and NEON
// (aarch64) variants are selected at runtime and equivalence-tested against
// the scalar versions.
//
// Accumulation semantics are part of the contract:
//  - vertical (elementwise) ops perform the same operation sequence per cell
//    in every variant, so their results are bit-identical across variants;
//  - horizontal reductions accumulate in f64; variants may split lanes, so
//    results agree to ~1e-15 relative, not bitwise;
//  - hamming_* are exact integer ops, identical across variants.

#include <cstddef>
#include <cstdint>

namespace nip::kernels {

struct KernelTable {
  const char* name;

  // popcount(xor) over nbytes
  uint64_t (*hamming)(const uint8_t* a, const uint8_t* b, size_t nbytes);
  // distances of one query against `count` codes of `code_bytes` each
  void (*hamming_scan)(const uint8_t* query, const uint8_t* db,
                       size_t code_bytes, size_t count, uint32_t* out);

  // sum of squared differences, f64 accumulator
  double (*l2sq)(const float* a, const float* b, size_t n);

  // horizontal reductions over contiguous f32
  double (*reduce_sum)(const float* v, size_t n);
  float (*reduce_max)(const float* v, size_t n);
  // sum of (v[i]*scale)^2, products formed in f64
  double (*reduce_sumsq_scaled)(const float* v, size_t n, double scale);

  // vertical slab accumulations, one op per cell
  void (*acc_sum)(double* acc, const float* v, size_t n);
  void (*acc_max)(float* acc, const float* v, size_t n);
  // acc[i] += (v[i]*inv_max[i])^2, products formed in f64
  void (*acc_sumsq_scaled)(double* acc, const float* v, const double* inv_max,
                           size_t n);
};

const KernelTable& scalar();

// Best variant for this machine; honors NIP_KERNELS=scalar|avx2|neon override.
const KernelTable& active();

// Null when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2();
const KernelTable* neon();

}  // namespace nip::kernels
