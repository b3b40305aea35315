// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>

#include "moonlet/chem/molecule.hpp"
#include "moonlet/wf/ansatz.hpp"

namespace moonlet::vmc {

/// Sum over nucleus pairs of Z_m Z_n / |R_m - R_n|.
double nuclear_repulsion(const chem::Molecule& molecule);

/// Coulomb potential of electrons (flat N x 3, bohr) and nuclei.
double potential(const chem::Molecule& molecule, std::span<const double> electrons);

/// -1/2 (laplacian + |gradient|^2) of log|psi|.
double kinetic_energy(const wf::LocalDerivatives& d);

double local_energy(const wf::Ansatz& ansatz, const Eigen::VectorXd& params,
                    std::span<const double> reparam, const wf::System& system,
                    std::span<const double> electrons);

}  // namespace moonlet::vmc
