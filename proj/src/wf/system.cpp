// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/system.hpp"

namespace moonlet::wf {

System System::build(const chem::Molecule& molecule,
                     const topology::LocalizationOptions& options) {
  System s{molecule, chem::build_frame(molecule), chem::ElectronLayout::for_molecule(molecule), {}, {}, {}};
  s.orbitals = topology::localize_orbitals(molecule, s.frame, options);
  for (const auto& n : molecule.nuclei()) s.local_nuclei.push_back(s.frame.to_local(n.position));
  for (const auto& o : s.orbitals.orbitals) s.local_orbitals.push_back(s.frame.to_local(o.location));
  return s;
}

}  // namespace moonlet::wf
