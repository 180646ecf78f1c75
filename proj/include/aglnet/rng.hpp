#pragma once

// Deterministic, jump-free random streams.
//
// The raw 64-bit stream is counter based (SplitMix64 over key + i·golden),
// so a stream is fully determined by its key and is cheap to fork: derived
// keys are obtained by hashing a list of 64-bit parts (seed, replicate,
// method tag, purpose tag, ...). Real-valued draws consume the u64 stream
// sequentially; the Gaussian generator uses the polar method with a cached
// spare, which is still deterministic per key.

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <string_view>

namespace aglnet {

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// FNV-1a, for turning tag strings into key parts.
constexpr std::uint64_t hash_tag(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Fold a list of parts into a single stream key.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t k = 0x9AFB33C1D3F2E0A7ULL;
  for (std::uint64_t p : parts) k = detail::mix64(k ^ (p + detail::kGolden));
  return k;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via Marsaglia's polar method; caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace aglnet
