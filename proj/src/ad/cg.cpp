// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/ad/cg.hpp"

#include <cmath>

#include "moonlet/errors.hpp"

namespace moonlet::ad {

CGResult conjugate_gradient(const LinearOperator& apply_a, const Eigen::VectorXd& b,
                            const InnerProduct& inner, int max_steps, double rel_tol) {
  CGResult result;
  result.x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = std::max(inner(r, r), 0.0);
  const double target = rel_tol * std::sqrt(rr);
  result.residual_norms.push_back(std::sqrt(rr));
  if (rr == 0.0) {
    result.converged = true;
    return result;
  }
  for (int it = 0; it < max_steps; ++it) {
    const Eigen::VectorXd ap = apply_a(p);
    const double pap = inner(p, ap);
    if (!(pap > 0.0)) {
      if (!std::isfinite(pap)) throw NumericalError("conjugate gradient: non-finite curvature");
      break;
    }
    const double alpha = rr / pap;
    result.x += alpha * p;
    r -= alpha * ap;
    const double rr_next = std::max(inner(r, r), 0.0);
    if (!result.x.allFinite() || !std::isfinite(rr_next))
      throw NumericalError("conjugate gradient: non-finite iterate");
    result.iterations = it + 1;
    result.residual_norms.push_back(std::sqrt(rr_next));
    if (std::sqrt(rr_next) < target) {
      result.converged = true;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return result;
}

CGResult cg_solve(const LinearOperator& apply_f, const Eigen::VectorXd& g, double damping,
                  int max_steps, double rel_tol) {
  return conjugate_gradient(
      [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return apply_f(v) + damping * v; }, g,
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }, max_steps,
      rel_tol);
}

}  // namespace moonlet::ad
