// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "moonlet/ad/math.hpp"
#include "moonlet/ad/params.hpp"

namespace moonlet::nn {

using ad::MatView;

/// Location of a tensor in a flat parameter array.
struct ParamRef {
  int offset = -1;
  int rows = 0;
  int cols = 0;

  bool valid() const { return offset >= 0; }
  int size() const { return rows * cols; }
  template <class P>
  MatView<P> view(const P* base) const {
    return {base + offset, rows, cols};
  }
  template <class P>
  const P* ptr(const P* base) const {
    return offset >= 0 ? base + offset : nullptr;
  }
};

inline ParamRef add_param(ad::ParamRegistry& reg, const std::string& name, int rows, int cols,
                          ad::InitSpec init) {
  return {reg.add(name, rows, cols, init), rows, cols};
}

struct DenseRef {
  ParamRef w;
  ParamRef b;  ///< invalid for bias-free layers
  int in() const { return w.rows; }
  int out() const { return w.cols; }
};

/// Glorot-like normal init scaled by `gain`; bias zero or absent.
DenseRef add_dense(ad::ParamRegistry& reg, const std::string& name, int in, int out,
                   bool bias = true, double gain = 1.0);

/// Perceptron with SiLU between layers and a linear last layer.
struct MlpRef {
  std::vector<DenseRef> layers;
  int in() const { return layers.front().in(); }
  int out() const { return layers.back().out(); }
};

/// widths = {in, hidden..., out}.
MlpRef add_mlp(ad::ParamRegistry& reg, const std::string& name, const std::vector<int>& widths,
               bool bias = true, double last_gain = 1.0);

template <class T, class P>
void dense(const P* base, const DenseRef& layer, std::span<const T> x, std::span<T> out) {
  ad::affine(x, layer.w.view(base), layer.b.ptr(base), out);
}

template <class T>
void silu_inplace(std::span<T> x) {
  for (auto& v : x) v = ad::silu(v);
}

/// Returns MLP(x). SiLU after every layer except the last, unless `activate_last`.
template <class T, class P>
std::vector<T> mlp(const P* base, const MlpRef& net, std::span<const T> x,
                   bool activate_last = false) {
  std::vector<T> cur(x.begin(), x.end());
  std::vector<T> next;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    next.assign(net.layers[l].out(), T(0.0));
    dense<T, P>(base, net.layers[l], std::span<const T>(cur), std::span<T>(next));
    if (l + 1 < net.layers.size() || activate_last) silu_inplace<T>(next);
    cur.swap(next);
  }
  return cur;
}

/// Parameter-free layer normalization.
template <class T>
void layer_norm(std::span<T> x, double eps = 1e-5) {
  using std::sqrt;
  const double n = static_cast<double>(x.size());
  T mean(0.0);
  for (const auto& v : x) mean += v;
  mean = mean * (1.0 / n);
  T var(0.0);
  for (auto& v : x) {
    v = v - mean;
    var += v * v;
  }
  const T inv = 1.0 / sqrt(var * (1.0 / n) + eps);
  for (auto& v : x) v = v * inv;
}

/// Weights of a spatial filter
///   Gamma(x) = W_out ((W_env env(x)) o MLP(x)),  env_i = exp(-|x|^2 / s_i^2),
/// with s = softplus(scale). MLP(x) = SiLU(x W1 + b1) W2 + b2. Each field is a
/// view into either the global parameters or per-atom reparametrized outputs.
template <class P>
struct FilterWeights {
  MatView<P> w1;
  const P* b1 = nullptr;
  MatView<P> w2;
  const P* b2 = nullptr;
  MatView<P> w_env;
  const P* scale = nullptr;  ///< raw envelope ranges, length D
  MatView<P> w_out;

  int hidden() const { return w1.cols; }
  int ranges() const { return w2.cols; }
  int out() const { return w_out.cols; }
};

/// Envelope widths 1/s^2 for a filter, computed once per evaluation.
template <class P>
std::vector<P> inverse_square_ranges(const FilterWeights<P>& f) {
  std::vector<P> out(f.ranges());
  for (int i = 0; i < f.ranges(); ++i) {
    const P s = ad::softplus(f.scale[i]);
    out[i] = 1.0 / (s * s);
  }
  return out;
}

template <class T, class P>
void spatial_filter(const FilterWeights<P>& f, std::span<const P> inv_sq_ranges,
                    const std::array<T, 3>& x, std::span<T> out) {
  const int h = f.hidden();
  const int d = f.ranges();
  std::vector<T> hidden(h), mix(d), env(d), mixed(d);
  ad::affine(std::span<const T>(x.data(), 3), f.w1, f.b1, std::span<T>(hidden));
  silu_inplace<T>(hidden);
  ad::affine(std::span<const T>(hidden), f.w2, f.b2, std::span<T>(mix));
  const T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  for (int i = 0; i < d; ++i) {
    using std::exp;
    env[i] = exp(-(r2 * T(inv_sq_ranges[i])));
  }
  ad::affine(std::span<const T>(env), f.w_env, static_cast<const P*>(nullptr), std::span<T>(mixed));
  for (int i = 0; i < d; ++i) mixed[i] = mixed[i] * mix[i];
  ad::affine(std::span<const T>(mixed), f.w_out, static_cast<const P*>(nullptr), out);
}

}  // namespace moonlet::nn
