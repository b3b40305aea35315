// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/ad/math.hpp"

#include <Eigen/Dense>

namespace moonlet::ad {

void affine(std::span<const Var> x, MatView<Var> w, const Var* b, std::span<Var> out) {
  thread_local std::vector<int> parents;
  thread_local std::vector<double> partials;
  Tape* tape = active_tape();
  for (int j = 0; j < w.cols; ++j) {
    parents.clear();
    partials.clear();
    double v = 0.0;
    if (b) {
      v = b[j].v;
      if (b[j].id >= 0) {
        parents.push_back(b[j].id);
        partials.push_back(1.0);
      }
    }
    for (int i = 0; i < w.rows; ++i) {
      const Var& xi = x[i];
      const Var& wij = w(i, j);
      v += xi.v * wij.v;
      if (xi.id >= 0 && wij.v != 0.0) {
        parents.push_back(xi.id);
        partials.push_back(wij.v);
      }
      if (wij.id >= 0 && xi.v != 0.0) {
        parents.push_back(wij.id);
        partials.push_back(xi.v);
      }
    }
    out[j] = parents.empty() ? Var(v) : Var(v, tape->add_node(parents, partials));
  }
}

template <>
SignedLog<Var> slogdet<Var>(std::vector<Var> a, int n) {
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = a[r * n + c].v;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  SignedLog<Var> out;
  double log_abs = 0.0;
  double sign = lu.permutationP().determinant();
  for (int i = 0; i < n; ++i) {
    const double d = packed(i, i);
    if (d == 0.0) {
      out.sign = 0.0;
      out.log_abs = Var(-std::numeric_limits<double>::infinity());
      return out;
    }
    if (d < 0.0) sign = -sign;
    log_abs += std::log(std::abs(d));
  }
  // d log|det A| / dA_rc = (A^-1)_cr
  const Eigen::MatrixXd inv = lu.inverse();
  std::vector<int> parents;
  std::vector<double> partials;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (a[r * n + c].id >= 0) {
        parents.push_back(a[r * n + c].id);
        partials.push_back(inv(c, r));
      }
  out.sign = sign;
  out.log_abs = parents.empty() ? Var(log_abs) : Var(log_abs, active_tape()->add_node(parents, partials));
  return out;
}

}  // namespace moonlet::ad
