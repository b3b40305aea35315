// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "moonlet/ad/params.hpp"

namespace moonlet::vmc {

struct NaturalDirection {
  Eigen::VectorXd x;         ///< approximate (F + damping I)^{-1} g
  Eigen::VectorXd gradient;  ///< g
  int iterations = 0;
  bool fallback = false;  ///< CG failed and x is the plain gradient
};

/// Natural-gradient direction for F = R^T R and g = R^T c, with R the stacked
/// (centered, weighted) Jacobian rows and c the matching energy coefficients.
/// CG runs on the walker-space system (R R^T + damping I) y = c with the inner
/// product a^T R R^T b, whose iterates x_k = R^T y_k equal those of CG on
/// (F + damping I) x = g started at zero.
NaturalDirection natural_direction(const Eigen::MatrixXd& rows, const Eigen::VectorXd& coefficients,
                                   double damping, int max_steps, double rel_tol = 1e-8);

/// Adaptive-moment optimizer with a per-entry trust ratio |theta_e| / |update_e|.
class Lamb {
 public:
  explicit Lamb(const ad::ParamRegistry& registry, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  /// Returns the updated parameters. Frozen entries are left unchanged.
  Eigen::VectorXd step(const Eigen::VectorXd& params, const Eigen::VectorXd& gradient);

  int steps() const { return t_; }
  double lr = 1e-3;

 private:
  const ad::ParamRegistry* registry_;
  double beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace moonlet::vmc
