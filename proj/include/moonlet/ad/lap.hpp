// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

namespace moonlet::ad {

/// Forward-mode scalar carrying a value, its gradient along K input directions
/// and the sum of its second derivatives along those directions (the Laplacian).
/// Unused directions stay zero.
template <int K>
struct Lap {
  static constexpr int kDirections = K;

  double v = 0.0;
  std::array<double, K> g{};
  double l = 0.0;

  Lap() = default;
  Lap(double value) : v(value) {}  // NOLINT: constants convert implicitly

  static Lap variable(double value, int direction) {
    Lap x(value);
    x.g[direction] = 1.0;
    return x;
  }

  Lap& operator+=(const Lap& b) {
    v += b.v;
    for (int k = 0; k < K; ++k) g[k] += b.g[k];
    l += b.l;
    return *this;
  }
  Lap& operator-=(const Lap& b) {
    v -= b.v;
    for (int k = 0; k < K; ++k) g[k] -= b.g[k];
    l -= b.l;
    return *this;
  }
  Lap& operator*=(double s) {
    v *= s;
    for (int k = 0; k < K; ++k) g[k] *= s;
    l *= s;
    return *this;
  }
  Lap& operator+=(double s) {
    v += s;
    return *this;
  }
  Lap& operator*=(const Lap& b) { return *this = *this * b; }

  friend Lap operator+(Lap a, const Lap& b) { return a += b; }
  friend Lap operator-(Lap a, const Lap& b) { return a -= b; }
  friend Lap operator+(Lap a, double s) { return a += s; }
  friend Lap operator+(double s, Lap a) { return a += s; }
  friend Lap operator-(Lap a, double s) { return a += -s; }
  friend Lap operator-(double s, const Lap& a) { return s + (-a); }
  friend Lap operator-(Lap a) { return a *= -1.0; }
  friend Lap operator*(Lap a, double s) { return a *= s; }
  friend Lap operator*(double s, Lap a) { return a *= s; }
  friend Lap operator/(Lap a, double s) { return a *= 1.0 / s; }

  friend Lap operator*(const Lap& a, const Lap& b) {
    Lap r;
    r.v = a.v * b.v;
    double cross = 0.0;
    for (int k = 0; k < K; ++k) {
      r.g[k] = a.g[k] * b.v + b.g[k] * a.v;
      cross += a.g[k] * b.g[k];
    }
    r.l = a.l * b.v + b.l * a.v + 2.0 * cross;
    return r;
  }

  /// f(a) given f(a.v), f'(a.v), f''(a.v).
  Lap chain(double f, double df, double d2f) const {
    Lap r;
    r.v = f;
    double sq = 0.0;
    for (int k = 0; k < K; ++k) {
      r.g[k] = df * g[k];
      sq += g[k] * g[k];
    }
    r.l = df * l + d2f * sq;
    return r;
  }

  friend Lap operator/(const Lap& a, const Lap& b) {
    const double inv = 1.0 / b.v;
    return a * b.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
  }
  friend Lap operator/(double s, const Lap& b) {
    const double inv = 1.0 / b.v;
    return b.chain(s * inv, -s * inv * inv, 2.0 * s * inv * inv * inv);
  }

  /// a += x * y without temporaries.
  void fma(const Lap& x, const Lap& y) {
    double cross = 0.0;
    for (int k = 0; k < K; ++k) {
      g[k] += x.g[k] * y.v + y.g[k] * x.v;
      cross += x.g[k] * y.g[k];
    }
    l += x.l * y.v + y.l * x.v + 2.0 * cross;
    v += x.v * y.v;
  }
  /// a += x * s for a constant s.
  void fma(const Lap& x, double s) {
    for (int k = 0; k < K; ++k) g[k] += x.g[k] * s;
    l += x.l * s;
    v += x.v * s;
  }
};

template <int K>
double value(const Lap<K>& x) {
  return x.v;
}

template <int K>
Lap<K> exp(const Lap<K>& x) {
  const double e = std::exp(x.v);
  return x.chain(e, e, e);
}
template <int K>
Lap<K> log(const Lap<K>& x) {
  const double inv = 1.0 / x.v;
  return x.chain(std::log(x.v), inv, -inv * inv);
}
template <int K>
Lap<K> log1p(const Lap<K>& x) {
  const double inv = 1.0 / (1.0 + x.v);
  return x.chain(std::log1p(x.v), inv, -inv * inv);
}
template <int K>
Lap<K> sqrt(const Lap<K>& x) {
  if (x.v <= 0.0) return Lap<K>(0.0);
  const double s = std::sqrt(x.v);
  return x.chain(s, 0.5 / s, -0.25 / (s * x.v));
}
template <int K>
Lap<K> tanh(const Lap<K>& x) {
  const double t = std::tanh(x.v);
  const double d = 1.0 - t * t;
  return x.chain(t, d, -2.0 * t * d);
}
template <int K>
Lap<K> abs(const Lap<K>& x) {
  return x.v < 0.0 ? -x : x;
}

}  // namespace moonlet::ad
