#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeding and portable scalar distributions.
//
// Every random draw in the toolkit descends from a single user-facing seed
// through rng::derive chains, so a run is reproducible bit-for-bit. The
// distributions are hand-rolled from uniform bits instead of <random>'s
// std::*_distribution, whose output is implementation-defined.

namespace odcal::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless hash of a seed and a salt; used to derive independent
// sub-streams (per replication, per OD, per vehicle leg, ...).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (salt << 6) + (salt >> 2));
  std::uint64_t a = splitmix64(s);
  s ^= salt * 0xff51afd7ed558ccdULL;
  return a ^ splitmix64(s);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive(derive(seed, a), b);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  return derive(derive(derive(seed, a), b), c);
}

// Uniform on (0, 1); never returns 0 or 1 exactly.
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

inline double uniform(Engine& eng) { return to_unit(eng()); }

// Uniform on [lo, hi).
inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform(eng);
}

// Exponential with the given rate (events per unit time).
inline double exponential(Engine& eng, double rate) {
  return -std::log(uniform(eng)) / rate;
}

// Standard normal via Box-Muller.
inline double std_normal(Engine& eng) {
  double u1 = uniform(eng);
  double u2 = uniform(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Standard normal from two hashed uniforms (counter-based, stateless).
inline double std_normal_hash(std::uint64_t seed) {
  double u1 = to_unit(derive(seed, 0x5bf03u));
  double u2 = to_unit(derive(seed, 0xa927du));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Multiplicative lognormal noise with mean 1 and the given coefficient of
// variation, drawn from a hashed counter.
inline double lognormal_unit_mean_hash(std::uint64_t seed, double cv) {
  if (cv <= 0.0) return 1.0;
  double sigma2 = std::log(1.0 + cv * cv);
  double sigma = std::sqrt(sigma2);
  return std::exp(-0.5 * sigma2 + sigma * std_normal_hash(seed));
}

}  // namespace odcal::rng
