#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace slatejudge {

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Maps 64 random bits to [0, 1) using the top 53 bits.
constexpr double to_unit_interval(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based stream: the i-th draw depends only on (key, i), so results do
// not depend on evaluation order or thread scheduling.
class KeyedStream {
 public:
  explicit KeyedStream(std::string_view key);
  explicit KeyedStream(uint64_t key) : key_(key) {}

  uint64_t bits(uint64_t index) const {
    return splitmix64(key_ ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  }
  double uniform(uint64_t index) const { return to_unit_interval(bits(index)); }

 private:
  uint64_t key_;
};

// Sequential generator for the simulator. The distributions are written out
// here rather than taken from <random> because the standard leaves their
// algorithms implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform() { return to_unit_interval(engine_()); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // k distinct indices from [0, n), in random order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace slatejudge
