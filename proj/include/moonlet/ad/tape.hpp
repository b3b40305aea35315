// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace moonlet::ad {

/// Reverse-mode computation graph. Nodes are appended in evaluation order;
/// node i stores the local partials with respect to its parents.
class Tape {
 public:
  Tape() { offsets_.push_back(0); }

  int size() const { return static_cast<int>(offsets_.size()) - 1; }
  void clear();
  void reserve(int nodes, int edges);

  int add_leaf() { return add_node({}, {}); }
  int add_node(std::span<const int> parents, std::span<const double> partials);
  int add_unary(int parent, double partial);
  int add_binary(int a, double da, int b, double db);

  /// Propagates adjoints from the highest node downwards. `adjoint` must hold
  /// size() entries, pre-seeded by the caller; it is updated in place.
  void backward(std::vector<double>& adjoint) const;
  /// Same as backward() but only visits nodes below `end`.
  void backward(std::vector<double>& adjoint, int end) const;
  /// `width` independent backward passes at once. `adjoint` is node-major:
  /// entry (node, k) lives at adjoint[node * width + k].
  void backward_batch(std::span<double> adjoint, int width) const;

 private:
  std::vector<int> offsets_;
  std::vector<int> parents_;
  std::vector<double> partials_;
};

/// Tape that new Var operations record onto, per thread.
Tape*& active_tape();

/// Makes a tape the active one for the current scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(active_tape()) { active_tape() = &tape; }
  ~TapeScope() { active_tape() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Scalar recorded on the active tape. id < 0 marks a constant.
struct Var {
  double v = 0.0;
  int id = -1;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: constants convert implicitly
  Var(double value, int node) : v(value), id(node) {}

  static Var leaf(double value) { return {value, active_tape()->add_leaf()}; }
  bool is_constant() const { return id < 0; }

  Var& operator+=(const Var& b) { return *this = *this + b; }
  Var& operator-=(const Var& b) { return *this = *this - b; }
  Var& operator*=(const Var& b) { return *this = *this * b; }

  friend Var operator+(const Var& a, const Var& b) {
    return record(a.v + b.v, a, 1.0, b, 1.0);
  }
  friend Var operator-(const Var& a, const Var& b) {
    return record(a.v - b.v, a, 1.0, b, -1.0);
  }
  friend Var operator*(const Var& a, const Var& b) {
    return record(a.v * b.v, a, b.v, b, a.v);
  }
  friend Var operator/(const Var& a, const Var& b) {
    const double inv = 1.0 / b.v;
    return record(a.v * inv, a, inv, b, -a.v * inv * inv);
  }
  friend Var operator-(const Var& a) { return a.unary(-a.v, -1.0); }

  friend Var operator+(const Var& a, double s) { return a.unary(a.v + s, 1.0); }
  friend Var operator+(double s, const Var& a) { return a.unary(a.v + s, 1.0); }
  friend Var operator-(const Var& a, double s) { return a.unary(a.v - s, 1.0); }
  friend Var operator-(double s, const Var& a) { return a.unary(s - a.v, -1.0); }
  friend Var operator*(const Var& a, double s) { return a.unary(a.v * s, s); }
  friend Var operator*(double s, const Var& a) { return a.unary(a.v * s, s); }
  friend Var operator/(const Var& a, double s) { return a.unary(a.v / s, 1.0 / s); }
  friend Var operator/(double s, const Var& a) {
    return a.unary(s / a.v, -s / (a.v * a.v));
  }

  /// f(a) given f(a.v) and f'(a.v).
  Var unary(double f, double df) const {
    if (id < 0) return Var(f);
    return {f, active_tape()->add_unary(id, df)};
  }

 private:
  static Var record(double value, const Var& a, double da, const Var& b, double db) {
    if (a.id < 0 && b.id < 0) return Var(value);
    if (a.id < 0) return {value, active_tape()->add_unary(b.id, db)};
    if (b.id < 0) return {value, active_tape()->add_unary(a.id, da)};
    return {value, active_tape()->add_binary(a.id, da, b.id, db)};
  }
};

inline double value(const Var& x) { return x.v; }
inline double value(double x) { return x; }

inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return x.unary(e, e);
}
inline Var log(const Var& x) { return x.unary(std::log(x.v), 1.0 / x.v); }
inline Var log1p(const Var& x) { return x.unary(std::log1p(x.v), 1.0 / (1.0 + x.v)); }
inline Var sqrt(const Var& x) {
  if (x.v <= 0.0) return Var(0.0);
  const double s = std::sqrt(x.v);
  return x.unary(s, 0.5 / s);
}
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.v);
  return x.unary(t, 1.0 - t * t);
}
inline Var abs(const Var& x) { return x.v < 0.0 ? -x : x; }

/// Records sum_i c_i * x_i + offset as a single node.
Var linear_combination(std::span<const Var> x, std::span<const double> c, double offset = 0.0);

}  // namespace moonlet::ad
