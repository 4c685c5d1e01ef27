#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nip/kernels.hpp"

using namespace nip;

namespace {

const std::vector<size_t> kLengths = {1, 2, 3, 7, 8, 15, 16, 31, 32, 33, 100, 1017};

std::vector<uint8_t> random_bytes(size_t n, std::mt19937_64& rng) {
  std::vector<uint8_t> v(n);
  for (auto& b : v) b = static_cast<uint8_t>(rng());
  return v;
}

std::vector<float> random_floats(size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(0.0f, 2.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// independent reference: per-bit loop
uint64_t naive_hamming(const std::vector<uint8_t>& a,
                       const std::vector<uint8_t>& b) {
  uint64_t d = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (int bit = 0; bit < 8; ++bit)
      if (((a[i] >> bit) & 1) != ((b[i] >> bit) & 1)) ++d;
  return d;
}

}  // namespace

TEST_CASE("hamming kernels match the naive bit loop exactly") {
  std::mt19937_64 rng(123);
  for (size_t n : kLengths) {
    auto a = random_bytes(n, rng);
    auto b = random_bytes(n, rng);
    uint64_t want = naive_hamming(a, b);
    CHECK(kernels::scalar().hamming(a.data(), b.data(), n) == want);
    if (const auto* t = kernels::avx2())
      CHECK(t->hamming(a.data(), b.data(), n) == want);
    if (const auto* t = kernels::neon())
      CHECK(t->hamming(a.data(), b.data(), n) == want);
  }
}

TEST_CASE("hamming_scan equals per-pair hamming") {
  std::mt19937_64 rng(7);
  const size_t stride = 32, count = 257;
  auto db = random_bytes(stride * count, rng);
  auto q = random_bytes(stride, rng);
  std::vector<uint32_t> out(count);
  const auto& k = kernels::active();
  k.hamming_scan(q.data(), db.data(), stride, count, out.data());
  for (size_t i = 0; i < count; ++i) {
    std::vector<uint8_t> code(db.begin() + static_cast<ptrdiff_t>(i * stride),
                              db.begin() + static_cast<ptrdiff_t>((i + 1) * stride));
    CHECK(out[i] == naive_hamming(q, code));
  }
}

TEST_CASE("horizontal reductions agree across variants") {
  std::mt19937_64 rng(99);
  for (size_t n : kLengths) {
    auto v = random_floats(n, rng);
    auto w = random_floats(n, rng);
    const auto& s = kernels::scalar();
    double sum = s.reduce_sum(v.data(), n);
    float mx = s.reduce_max(v.data(), n);
    double ssq = s.reduce_sumsq_scaled(v.data(), n, 0.73);
    double l2 = s.l2sq(v.data(), w.data(), n);
    for (const auto* t : {kernels::avx2(), kernels::neon()}) {
      if (!t) continue;
      CHECK(t->reduce_sum(v.data(), n) == doctest::Approx(sum).epsilon(1e-12));
      CHECK(t->reduce_max(v.data(), n) == mx);  // max is order-free, exact
      CHECK(t->reduce_sumsq_scaled(v.data(), n, 0.73) ==
            doctest::Approx(ssq).epsilon(1e-12));
      CHECK(t->l2sq(v.data(), w.data(), n) == doctest::Approx(l2).epsilon(1e-12));
    }
  }
}

TEST_CASE("vertical accumulations are bit-identical across variants") {
  std::mt19937_64 rng(2024);
  for (size_t n : kLengths) {
    auto v = random_floats(n, rng);
    std::vector<double> inv(n);
    for (size_t i = 0; i < n; ++i) inv[i] = 1.0 / (1.0 + v[i]);

    std::vector<double> acc_ref(n, 0.25), acc_var(n, 0.25);
    std::vector<float> mx_ref(n, 0.0f), mx_var(n, 0.0f);
    std::vector<double> sq_ref(n, 0.5), sq_var(n, 0.5);
    const auto& s = kernels::scalar();
    s.acc_sum(acc_ref.data(), v.data(), n);
    s.acc_max(mx_ref.data(), v.data(), n);
    s.acc_sumsq_scaled(sq_ref.data(), v.data(), inv.data(), n);

    for (const auto* t : {kernels::avx2(), kernels::neon()}) {
      if (!t) continue;
      std::fill(acc_var.begin(), acc_var.end(), 0.25);
      std::fill(mx_var.begin(), mx_var.end(), 0.0f);
      std::fill(sq_var.begin(), sq_var.end(), 0.5);
      t->acc_sum(acc_var.data(), v.data(), n);
      t->acc_max(mx_var.data(), v.data(), n);
      t->acc_sumsq_scaled(sq_var.data(), v.data(), inv.data(), n);
      for (size_t i = 0; i < n; ++i) {
        CHECK(acc_var[i] == acc_ref[i]);
        CHECK(mx_var[i] == mx_ref[i]);
        CHECK(sq_var[i] == sq_ref[i]);
      }
    }
  }
}

TEST_CASE("active kernel table is well-formed") {
  const auto& k = kernels::active();
  CHECK(k.name != nullptr);
  float v[3] = {1.0f, 5.0f, 2.0f};
  CHECK(k.reduce_max(v, 3) == 5.0f);
  CHECK(k.reduce_sum(v, 3) == doctest::Approx(8.0));
}
