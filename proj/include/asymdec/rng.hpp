#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace asymdec {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used both as a seed
// expander and as the hash that derives per-task seeds.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for task `index` under `master`. Independent of evaluation order, so
// replications can be scheduled on any number of threads.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

// xoshiro256** 1.0 (Blackman & Vigna), state filled from SplitMix64(seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;

  // Uniform on the open interval (0,1) with 53-bit resolution.
  double uniform() noexcept;
  // Standard normal by inversion of the uniform draw.
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Standard normal CDF via erfc.
double normal_cdf(double x) noexcept;

// Inverse standard normal CDF: Acklam's rational approximation followed by a
// single Halley correction against erfc. Absolute error is far below 1e-9 on
// (0,1). Returns -inf/+inf at 0/1.
double inverse_normal_cdf(double p) noexcept;

}  // namespace asymdec
