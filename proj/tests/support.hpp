#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mras/fem.hpp"
#include "mras/mesh.hpp"

namespace testing_support {

// Unit square split along the (0,0)-(1,1) diagonal.
inline mras::Mesh two_triangles() {
  return mras::Mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

inline mras::Mesh reference_triangle() { return mras::Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}); }

// n x n cells on [0,1]^2 with interior vertices shifted by up to 0.2 h,
// alternating diagonals. Irregular enough that no two elements share a shape.
inline mras::Mesh jittered_square(std::size_t n, unsigned seed = 3) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> jit(-0.2, 0.2);
  const double h = 1.0 / static_cast<double>(n);
  std::vector<mras::Point> v;
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i) {
      double x = i * h, y = j * h;
      if (i > 0 && i < n && j > 0 && j < n) {
        x += jit(gen) * h;
        y += jit(gen) * h;
      }
      v.push_back({x, y});
    }
  std::vector<mras::Triangle> t;
  const auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      } else {
        t.push_back({a, b, d});
        t.push_back({b, c, d});
      }
    }
  return mras::Mesh(std::move(v), std::move(t));
}

inline std::vector<double> random_vector(std::size_t n, unsigned seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing_support
