// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>

namespace moonlet::ad {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using InnerProduct = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct CGResult {
  Eigen::VectorXd x;
  int iterations = 0;
  std::vector<double> residual_norms;  ///< includes the initial residual
  bool converged = false;
};

/// Conjugate gradients for A x = b with A symmetric positive definite with respect
/// to `inner`. Stops after max_steps or when ||r|| < rel_tol * ||b||. Starts at 0.
/// Throws NumericalError if an iterate becomes non-finite.
CGResult conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                            const InnerProduct& inner, int max_steps, double rel_tol);

/// Approximately solves (F + damping I) x = g.
CGResult cg_solve(const LinearOperator& apply_f, const Eigen::VectorXd& g, double damping,
                  int max_steps, double rel_tol = 1e-6);

}  // namespace moonlet::ad
