#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "kurv/common.hpp"

namespace kurv::rng {

// splitmix64 step; used to decorrelate derived stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for an independent substream (worker chunks, recheck passes, ...).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

// Deterministic generator wrapper.  Gaussian draws use Box-Muller on raw
// uniform bits so the byte stream does not depend on the standard library's
// distribution implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0,1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Cplx cnormal() { return Cplx(normal(), normal()) / std::sqrt(2.0); }

  // Uniform point in the closed disk of the given radius.
  Cplx disk(double radius) {
    const double r = radius * std::sqrt(uniform());
    const double a = 2.0 * std::numbers::pi * uniform();
    return Cplx(r * std::cos(a), r * std::sin(a));
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kurv::rng
