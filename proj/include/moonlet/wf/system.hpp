// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "moonlet/chem/molecule.hpp"
#include "moonlet/topology/orbitals.hpp"

namespace moonlet::wf {

using chem::Vec3;

/// Everything about a molecule that stays fixed while its wave function is
/// evaluated: frame, electron layout and localized orbitals, in frame-local
/// coordinates where the networks need them.
struct System {
  chem::Molecule molecule;
  chem::Frame frame;
  chem::ElectronLayout layout;
  topology::OrbitalSet orbitals;
  std::vector<Vec3> local_nuclei;
  std::vector<Vec3> local_orbitals;

  static System build(const chem::Molecule& molecule,
                      const topology::LocalizationOptions& options = {});

  int n_atoms() const { return molecule.size(); }
  int n_electrons() const { return layout.n_total; }
  int n_orbitals() const { return orbitals.size(); }
  int charge(int m) const { return molecule.charge(m); }
};

}  // namespace moonlet::wf
