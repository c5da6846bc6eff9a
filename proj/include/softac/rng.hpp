#pragma once

#include <cstdint>

namespace softac {

// Counter-based splittable RNG. Every consumer derives its own stream from
// (seed, stream_id), so parallel runs and reordered call sites stay
// bit-reproducible across platforms. The generator is splitmix64; the
// floating-point helpers below avoid std::uniform_* distributions, whose
// output is implementation-defined.
class RngStream {
 public:
  RngStream() : state_(0x9e3779b97f4a7c15ULL) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    state_ = mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream_id + 0xbf58476d1ce4e5b9ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
  // compared to 2^64, so the bias is far below anything observable.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  RngStream split(std::uint64_t child_id) const {
    RngStream out;
    out.state_ = mix(state_ ^ mix(child_id + 0x94d049bb133111ebULL));
    return out;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace softac
