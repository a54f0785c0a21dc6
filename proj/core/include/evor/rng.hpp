#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace evor {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child streams from a
// master seed so per-episode / per-seed work is order independent.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> standard_normal(Eigen::Index rows,
                                                                 Eigen::Index cols, Rng& rng) {
  std::normal_distribution<T> dist(T(0), T(1));
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  return out;
}

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, 1> uniform01(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<T> dist(T(0), T(1));
  Eigen::Matrix<T, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

}  // namespace evor
