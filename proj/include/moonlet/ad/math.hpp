// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "moonlet/ad/lap.hpp"
#include "moonlet/ad/tape.hpp"

namespace moonlet::ad {

template <class T>
struct is_lap : std::false_type {};
template <int K>
struct is_lap<Lap<K>> : std::true_type {};

/// Function value with first and second derivative at a point.
struct Jet {
  double f;
  double df;
  double d2f;
};

inline Jet sigmoid_jet(double x) {
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return {s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s)};
}

inline Jet softplus_jet(double x) {
  const Jet s = sigmoid_jet(x);
  const double f = x > 30.0 ? x : std::log1p(std::exp(x));
  return {f, s.f, s.df};
}

inline Jet silu_jet(double x) {
  const Jet s = sigmoid_jet(x);
  return {x * s.f, s.f + x * s.df, 2.0 * s.df + x * s.d2f};
}

inline double apply(double x, Jet (*jet)(double)) { return jet(x).f; }
template <int K>
Lap<K> apply(const Lap<K>& x, Jet (*jet)(double)) {
  const Jet j = jet(x.v);
  return x.chain(j.f, j.df, j.d2f);
}
inline Var apply(const Var& x, Jet (*jet)(double)) {
  const Jet j = jet(x.v);
  return x.unary(j.f, j.df);
}

template <class T>
T sigmoid(const T& x) {
  return apply(x, sigmoid_jet);
}
template <class T>
T softplus(const T& x) {
  return apply(x, softplus_jet);
}
template <class T>
T silu(const T& x) {
  return apply(x, silu_jet);
}

inline double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

/// Row-major read-only matrix view; vectors are 1 x n.
template <class P>
struct MatView {
  const P* data = nullptr;
  int rows = 0;
  int cols = 0;

  const P& operator()(int r, int c) const { return data[r * cols + c]; }
  const P* row(int r) const { return data + r * cols; }
  const P& operator[](int i) const { return data[i]; }
  int size() const { return rows * cols; }
};

/// out_j = b_j + sum_i x_i W_ij (b may be null).
template <class T, class P>
void affine(std::span<const T> x, MatView<P> w, const P* b, std::span<T> out) {
  for (int j = 0; j < w.cols; ++j) out[j] = b ? T(b[j]) : T(0.0);
  for (int i = 0; i < w.rows; ++i) {
    const P* wr = w.row(i);
    for (int j = 0; j < w.cols; ++j) out[j] += x[i] * wr[j];
  }
}

inline void affine(std::span<const double> x, MatView<double> w, const double* b,
                   std::span<double> out) {
  for (int j = 0; j < w.cols; ++j) out[j] = b ? b[j] : 0.0;
  for (int i = 0; i < w.rows; ++i) {
    const double xi = x[i];
    const double* wr = w.row(i);
    for (int j = 0; j < w.cols; ++j) out[j] += xi * wr[j];
  }
}

template <int K>
void affine(std::span<const Lap<K>> x, MatView<double> w, const double* b,
            std::span<Lap<K>> out) {
  for (int j = 0; j < w.cols; ++j) out[j] = Lap<K>(b ? b[j] : 0.0);
  for (int i = 0; i < w.rows; ++i) {
    const double* wr = w.row(i);
    for (int j = 0; j < w.cols; ++j) out[j].fma(x[i], wr[j]);
  }
}

void affine(std::span<const Var> x, MatView<Var> w, const Var* b, std::span<Var> out);

/// Sign and log-magnitude of a determinant; sign 0 with log -inf if singular.
template <class T>
struct SignedLog {
  double sign = 0.0;
  T log_abs;
};

/// Row-major n x n matrix. Gaussian elimination with partial pivoting on values.
template <class T>
SignedLog<T> slogdet(std::vector<T> a, int n) {
  using std::abs;
  using std::log;
  SignedLog<T> out;
  out.sign = 1.0;
  out.log_abs = T(0.0);
  for (int c = 0; c < n; ++c) {
    int pivot = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(value(a[r * n + c])) > std::abs(value(a[pivot * n + c]))) pivot = r;
    if (value(a[pivot * n + c]) == 0.0) {
      out.sign = 0.0;
      out.log_abs = T(-std::numeric_limits<double>::infinity());
      return out;
    }
    if (pivot != c) {
      for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[pivot * n + k]);
      out.sign = -out.sign;
    }
    const T& p = a[c * n + c];
    if (value(p) < 0.0) out.sign = -out.sign;
    out.log_abs += log(abs(p));
    if (c + 1 == n) break;
    const T inv = 1.0 / p;
    for (int r = c + 1; r < n; ++r) {
      const T factor = a[r * n + c] * inv;
      for (int k = c + 1; k < n; ++k) a[r * n + k] -= factor * a[c * n + k];
    }
  }
  return out;
}

template <>
SignedLog<Var> slogdet<Var>(std::vector<Var> a, int n);

}  // namespace moonlet::ad
