#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace panelkit::rng {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// splitmix64 finalizer; spreads low-entropy seeds over the full word.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Random stream with explicitly coded uniform/normal transforms so a given
// seed yields the same draws on every platform and toolchain.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(mix64(seed)) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0,1) with 53 random mantissa bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0,n); rejection keeps it exactly uniform
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal, Marsaglia polar method with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Builds a child stream from a master seed plus a structured key
// (tag, item id, group id, ...). Streams depend only on (seed, key), never on
// evaluation order, which is what makes parallel runs bit-reproducible.
class SubstreamKey {
 public:
  SubstreamKey& with(std::string_view part) {
    h_ = fnv1a(part, h_);
    h_ ^= kSeparator;
    h_ *= kFnvPrime;
    return *this;
  }

  SubstreamKey& with(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xff;
      h_ *= kFnvPrime;
    }
    h_ ^= kSeparator;
    h_ *= kFnvPrime;
    return *this;
  }

  std::uint64_t value(std::uint64_t master_seed) const {
    return mix64(master_seed ^ mix64(h_));
  }

  Stream stream(std::uint64_t master_seed) const {
    return Stream(value(master_seed));
  }

 private:
  static constexpr std::uint64_t kSeparator = 0x1f;
  std::uint64_t h_ = kFnvOffset;
};

}  // namespace panelkit::rng
