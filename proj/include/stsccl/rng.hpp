#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace stsccl {

// splitmix64 finalizer; used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(eng_);
  }

  // Gumbel(0,1) via -log(-log(U)), U clamped away from 0.
  double gumbel() {
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    return -std::log(-std::log(u));
  }

  int64_t randint(int64_t n) {  // [0, n)
    std::uniform_int_distribution<int64_t> d(0, n - 1);
    return d(eng_);
  }

  std::vector<int64_t> permutation(int64_t n) {
    std::vector<int64_t> p(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    for (int64_t i = n - 1; i > 0; --i) {
      std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(randint(i + 1))]);
    }
    return p;
  }

  // First k elements of a permutation of [0, n): sampling without replacement.
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k) {
    auto p = permutation(n);
    p.resize(static_cast<size_t>(k < n ? k : n));
    return p;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace stsccl
