#pragma once

#include <cstdint>
#include <string_view>

namespace irtcat {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based stream: output i is a pure function of (key, i), so replay
// and derived substreams are reproducible regardless of call interleaving.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t derive_key(std::uint64_t seed, std::string_view name) {
    return mix64(seed ^ hash_str(name));
  }
  static CounterRng substream(std::uint64_t seed, std::string_view name) {
    return CounterRng(derive_key(seed, name));
  }

  std::uint64_t next_u64() { return mix64(key_ + counter_++); }

  // uniform on [0,1), 53-bit mantissa
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer on [0,n), Lemire multiply-shift with rejection
  std::uint32_t next_below(std::uint32_t n) {
    std::uint64_t x = next_u64() & 0xffffffffULL;
    std::uint64_t m = x * n;
    std::uint32_t l = static_cast<std::uint32_t>(m);
    if (l < n) {
      std::uint32_t t = (0u - n) % n;
      while (l < t) {
        x = next_u64() & 0xffffffffULL;
        m = x * n;
        l = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace irtcat
