// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/canon/canonicalize.hpp"

#include <ceres/ceres.h>

#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "moonlet/errors.hpp"

namespace moonlet::canon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LocalityMask build_mask(const topology::OrbitalSet& orbitals, const chem::HFSolution& hf) {
  const int n_mo = orbitals.size();
  if (n_mo != hf.n_mo())
    throw ValidationError("orbital set has " + std::to_string(n_mo) +
                          " orbitals but the HF solution has " + std::to_string(hf.n_mo()));

  // atom -> (type key -> molecular orbitals). Core shells sort before bond orders.
  std::map<int, std::map<std::pair<int, int>, std::vector<int>>> priority;
  for (int i = 0; i < n_mo; ++i) {
    const auto& orb = orbitals.orbitals[i];
    std::pair<int, int> key;
    if (const auto* core = std::get_if<topology::CoreType>(&orb.type))
      key = {0, core->shell};
    else
      key = {1, std::get<topology::ValenceType>(orb.type).order};
    priority[orb.atom_a][key].push_back(i);
    if (orb.atom_b != orb.atom_a) priority[orb.atom_b][key].push_back(i);
  }

  LocalityMask mask{MatrixXd::Zero(hf.n_ao(), n_mo)};
  for (const auto& [atom, types] : priority) {
    const int begin = hf.ao_offset(atom);
    const int end = begin + hf.ao_per_atom[atom];
    int offset = begin;
    for (const auto& [key, mos] : types) {
      const int k = static_cast<int>(mos.size());
      if (offset + k > end)
        throw BasisTooSmallError("atom " + std::to_string(atom) + " needs more than its " +
                                 std::to_string(hf.ao_per_atom[atom]) + " atomic orbitals");
      for (int mo : mos)
        for (int q = offset; q < offset + k; ++q) mask.values(q, mo) = 1.0;
      offset += k;
    }
  }
  return mask;
}

std::vector<int> hungarian(const MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ValidationError("hungarian: cost matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with potentials; 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

namespace {

// Per-column objective of a column x placed into the slot with mask column m.
double column_loss(const VectorXd& x, const VectorXd& m) {
  const VectorXd inside = x.cwiseProduct(m);
  const VectorXd outside = x - inside;
  const double norm = inside.norm();
  return outside.squaredNorm() + (1.0 - norm) * (1.0 - norm);
}

class LossFunction final : public ceres::FirstOrderFunction {
 public:
  LossFunction(const MatrixXd& omega, const LocalityMask& mask) : omega_(omega), mask_(mask) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const int n = static_cast<int>(omega_.rows());
    const Eigen::Map<const MatrixXd> a_hat(parameters, n, n);
    MatrixXd grad;
    const double loss = locality_loss_normalized(omega_, mask_, a_hat, gradient ? &grad : nullptr);
    if (!std::isfinite(loss)) return false;
    cost[0] = loss;
    if (gradient) Eigen::Map<MatrixXd>(gradient, n, n) = grad;
    return true;
  }

  int NumParameters() const override { return static_cast<int>(omega_.rows() * omega_.rows()); }

 private:
  const MatrixXd& omega_;
  const LocalityMask& mask_;
};

}  // namespace

double locality_loss(const MatrixXd& omega, const LocalityMask& mask, const MatrixXd& transform) {
  const MatrixXd x = omega.transpose() * transform;
  double loss = 0.0;
  for (int i = 0; i < x.cols(); ++i) loss += column_loss(x.col(i), mask.values.col(i));
  return loss;
}

double locality_loss_normalized(const MatrixXd& omega, const LocalityMask& mask,
                                const MatrixXd& a_hat, MatrixXd* gradient) {
  const int n = static_cast<int>(a_hat.rows());
  const Eigen::PartialPivLU<MatrixXd> lu(a_hat);
  const double det = lu.determinant();
  if (!(std::abs(det) > 1e-300)) return std::numeric_limits<double>::infinity();
  const double scale = std::pow(std::abs(det), -1.0 / n);
  const MatrixXd a = scale * a_hat;
  const MatrixXd x = omega.transpose() * a;
  const MatrixXd& m = mask.values;

  double loss = 0.0;
  MatrixXd dx(x.rows(), x.cols());
  for (int i = 0; i < x.cols(); ++i) {
    const VectorXd inside = x.col(i).cwiseProduct(m.col(i));
    const VectorXd outside = x.col(i) - inside;
    const double norm = inside.norm();
    loss += outside.squaredNorm() + (1.0 - norm) * (1.0 - norm);
    dx.col(i) = 2.0 * outside;
    if (norm > 0.0) dx.col(i) -= 2.0 * (1.0 - norm) / norm * inside;
  }
  if (gradient) {
    const MatrixXd g = omega * dx;  // dL/dA
    const MatrixXd inv_t = lu.inverse().transpose();
    *gradient = scale * g - (scale / n) * (g.cwiseProduct(a_hat).sum()) * inv_t;
  }
  return loss;
}

double masked_out_energy(const MatrixXd& omega_t, const LocalityMask& mask) {
  return omega_t.cwiseProduct(MatrixXd::Ones(mask.n_ao(), mask.n_mo()) - mask.values)
      .squaredNorm();
}

VectorXd canonical_signs(const MatrixXd& omega_t, const LocalityMask& mask) {
  VectorXd signs(omega_t.cols());
  for (int i = 0; i < omega_t.cols(); ++i)
    signs[i] = omega_t.col(i).cwiseProduct(mask.values.col(i)).sum() < 0.0 ? -1.0 : 1.0;
  return signs;
}

CanonicalizedHF canonicalize(const chem::HFSolution& hf, const LocalityMask& mask,
                             const CanonicalizationOptions& options) {
  const MatrixXd& omega = hf.coefficients;
  const int n = hf.n_mo();
  if (mask.n_ao() != hf.n_ao() || mask.n_mo() != n)
    throw ValidationError("mask shape does not match the HF solution");

  CanonicalizedHF result;
  MatrixXd a = MatrixXd::Identity(n, n);
  double previous = locality_loss(omega, mask, a);
  result.loss_trace.push_back(previous);

  auto assignment_step = [&]() {
    const MatrixXd x = omega.transpose() * a;
    MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = column_loss(x.col(i), mask.values.col(j));
    const std::vector<int> perm = hungarian(cost);
    MatrixXd permuted(n, n);
    for (int i = 0; i < n; ++i) permuted.col(perm[i]) = a.col(i);
    a = permuted;
  };

  ceres::GradientProblemSolver::Options solver_options;
  solver_options.line_search_direction_type = ceres::BFGS;
  solver_options.max_num_iterations = options.max_inner;
  solver_options.gradient_tolerance = options.gradient_tolerance;
  solver_options.function_tolerance = 1e-14;
  solver_options.logging_type = ceres::SILENT;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    assignment_step();
    MatrixXd a_hat = a;
    ceres::GradientProblem problem(new LossFunction(omega, mask));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(solver_options, problem, a_hat.data(), &summary);
    const double det = a_hat.determinant();
    if (std::isfinite(det) && std::abs(det) > 1e-300) {
      const MatrixXd candidate = a_hat / std::pow(std::abs(det), 1.0 / n);
      if (locality_loss(omega, mask, candidate) <= locality_loss(omega, mask, a)) a = candidate;
    }
    assignment_step();
    const double loss = locality_loss(omega, mask, a);
    result.loss_trace.push_back(loss);
    if (std::abs(previous - loss) < options.loss_tolerance) {
      result.converged = true;
      break;
    }
    previous = loss;
  }
  if (!result.converged)
    std::cerr << "warning: canonicalization of '" << hf.molecule.name()
              << "' did not converge within " << options.max_outer
              << " rounds; using the best transform found\n";

  const MatrixXd omega_t = omega.transpose() * a;
  result.transform = a;
  result.signs = canonical_signs(omega_t, mask);
  result.coefficients = (omega_t * result.signs.asDiagonal()).transpose();
  return result;
}

MatrixXd eval_hf_orbitals(const chem::HFSolution& hf, const CanonicalizedHF& canon,
                          std::span<const chem::Vec3> electrons) {
  return hf.evaluate_aos(electrons) * canon.coefficients.transpose();
}

}  // namespace moonlet::canon
