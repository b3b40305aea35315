// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/vmc/optimizer.hpp"

#include <cmath>

#include "moonlet/ad/cg.hpp"
#include "moonlet/errors.hpp"

namespace moonlet::vmc {

NaturalDirection natural_direction(const Eigen::MatrixXd& rows, const Eigen::VectorXd& coefficients,
                                   double damping, int max_steps, double rel_tol) {
  NaturalDirection out;
  out.gradient = rows.transpose() * coefficients;
  const int n = static_cast<int>(rows.rows());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(rows);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  try {
    const ad::CGResult cg = ad::conjugate_gradient(
        [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return gram * y + damping * y; },
        coefficients, [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(gram * b); },
        max_steps, rel_tol);
    out.x = rows.transpose() * cg.x;
    out.iterations = cg.iterations;
    if (!out.x.allFinite()) throw NumericalError("non-finite natural gradient");
  } catch (const NumericalError&) {
    out.x = out.gradient;
    out.fallback = true;
  }
  return out;
}

Lamb::Lamb(const ad::ParamRegistry& registry, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), registry_(&registry), beta1_(beta1), beta2_(beta2), eps_(eps) {}

Eigen::VectorXd Lamb::step(const Eigen::VectorXd& params, const Eigen::VectorXd& gradient) {
  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  Eigen::VectorXd out = params;
  for (const auto& e : registry_->entries()) {
    if (e.frozen) continue;
    const int n = e.rows * e.cols;
    const Eigen::VectorXd u = (m_.segment(e.offset, n) / c1).array() /
                              ((v_.segment(e.offset, n) / c2).array().sqrt() + eps_);
    const double pn = params.segment(e.offset, n).norm();
    const double un = u.norm();
    const double ratio = pn > 0.0 && un > 0.0 ? pn / un : 1.0;
    out.segment(e.offset, n) -= lr * ratio * u;
  }
  return out;
}

}  // namespace moonlet::vmc
