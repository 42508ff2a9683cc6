#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace imbf {

// SplitMix64. Fully specified here so that every seeded draw in the library
// is reproducible across compilers and standard libraries (std:: distributions
// are implementation-defined).
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0, n) via rejection.
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

 private:
  uint64_t state_;
};

// Deterministic combiner for deriving sub-stream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return g.next();
}

// In-place Fisher-Yates.
template <typename T>
void shuffle_in_place(std::vector<T>& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  SplitMix64 rng(seed);
  shuffle_in_place(idx, rng);
  return idx;
}

// k distinct indices drawn uniformly from [0, n), returned in ascending order
// so that callers which filter a sequence by this set preserve relative order.
inline std::vector<size_t> sample_indices(size_t n, size_t k, SplitMix64& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  for (size_t i = 0; i < k && i < n; ++i) {
    size_t j = i + static_cast<size_t>(rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace imbf
