// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "moonlet/chem/hf_solution.hpp"
#include "moonlet/topology/orbitals.hpp"

namespace moonlet::canon {

/// Binary eta x N matrix; entry (a, i) = 1 if atomic orbital a may contribute
/// to localized molecular orbital i.
struct LocalityMask {
  Eigen::MatrixXd values;

  int n_ao() const { return static_cast<int>(values.rows()); }
  int n_mo() const { return static_cast<int>(values.cols()); }
};

/// Assigns atomic orbitals of the defining atoms to each localized orbital.
/// Throws BasisTooSmallError if an atom runs out of atomic orbitals.
LocalityMask build_mask(const topology::OrbitalSet& orbitals, const chem::HFSolution& hf);

/// Minimum-cost assignment. Returns perm with perm[row] = assigned column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct CanonicalizationOptions {
  int max_outer = 10;
  int max_inner = 500;
  double gradient_tolerance = 1e-9;
  double loss_tolerance = 1e-10;
};

struct CanonicalizedHF {
  Eigen::MatrixXd transform;  ///< A, N x N with |det A| = 1, applied before signs
  Eigen::VectorXd signs;      ///< diagonal of D
  /// (Omega^T A D)^T: rows are the localized molecular orbitals over the AO basis.
  Eigen::MatrixXd coefficients;
  std::vector<double> loss_trace;
  bool converged = false;
};

/// ||X o (1 - M)||^2 + sum_i (1 - ||(X o M)_i||)^2 with X = Omega^T A.
double locality_loss(const Eigen::MatrixXd& omega, const LocalityMask& mask,
                     const Eigen::MatrixXd& transform);
/// Gradient of the loss w.r.t. the unnormalized matrix, A = A_hat / |det A_hat|^(1/N).
double locality_loss_normalized(const Eigen::MatrixXd& omega, const LocalityMask& mask,
                                const Eigen::MatrixXd& a_hat, Eigen::MatrixXd* gradient);
/// Squared norm of the masked-out part of X.
double masked_out_energy(const Eigen::MatrixXd& omega_t, const LocalityMask& mask);

/// D_ii = -1 iff the masked coefficients of orbital i sum to a negative value.
Eigen::VectorXd canonical_signs(const Eigen::MatrixXd& omega_t, const LocalityMask& mask);

/// Alternating quasi-Newton / assignment search for A. Never throws on
/// non-convergence; `converged` reports it.
CanonicalizedHF canonicalize(const chem::HFSolution& hf, const LocalityMask& mask,
                             const CanonicalizationOptions& options = {});

/// n_electrons x N matrix phi_i(r_j) of the canonical orbitals at global positions.
Eigen::MatrixXd eval_hf_orbitals(const chem::HFSolution& hf, const CanonicalizedHF& canon,
                                 std::span<const chem::Vec3> electrons);

}  // namespace moonlet::canon
