// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/vmc/hamiltonian.hpp"

namespace moonlet::vmc {

using chem::Vec3;

namespace {

Vec3 electron(std::span<const double> x, int i) { return {x[3 * i], x[3 * i + 1], x[3 * i + 2]}; }

}  // namespace

double nuclear_repulsion(const chem::Molecule& molecule) {
  double v = 0.0;
  for (int m = 0; m < molecule.size(); ++m)
    for (int n = m + 1; n < molecule.size(); ++n)
      v += molecule.charge(m) * molecule.charge(n) /
           (molecule.position(m) - molecule.position(n)).norm();
  return v;
}

double potential(const chem::Molecule& molecule, std::span<const double> electrons) {
  const int n = static_cast<int>(electrons.size() / 3);
  double v = nuclear_repulsion(molecule);
  for (int i = 0; i < n; ++i) {
    const Vec3 e = electron(electrons, i);
    for (int j = i + 1; j < n; ++j) v += 1.0 / (e - electron(electrons, j)).norm();
    for (int m = 0; m < molecule.size(); ++m)
      v -= molecule.charge(m) / (e - molecule.position(m)).norm();
  }
  return v;
}

double kinetic_energy(const wf::LocalDerivatives& d) {
  return -0.5 * (d.laplacian + d.gradient.squaredNorm());
}

double local_energy(const wf::Ansatz& ansatz, const Eigen::VectorXd& params,
                    std::span<const double> reparam, const wf::System& system,
                    std::span<const double> electrons) {
  const wf::LocalDerivatives d = ansatz.derivatives(params, reparam, system, electrons);
  return kinetic_energy(d) + potential(system.molecule, electrons);
}

}  // namespace moonlet::vmc
