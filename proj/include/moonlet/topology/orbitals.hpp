// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "moonlet/chem/molecule.hpp"

namespace moonlet::topology {

using chem::Vec3;

/// The `shell`-th core orbital (1-based) of a nucleus with the given charge.
struct CoreType {
  int charge = 0;
  int shell = 0;
  bool operator==(const CoreType&) const = default;
};

/// The `order`-th orbital (1-based) of a bond between two nuclei.
struct ValenceType {
  int order = 0;
  bool operator==(const ValenceType&) const = default;
};

using OrbitalType = std::variant<CoreType, ValenceType>;

struct LocalizedOrbital {
  Vec3 location;  ///< global coordinates
  OrbitalType type;
  int atom_a = 0;  ///< defining atoms, atom_a <= atom_b; equal for core and self bonds
  int atom_b = 0;
};

struct Bond {
  int atom_a = 0;
  int atom_b = 0;
  int multiplicity = 0;
};

struct OrbitalSet {
  std::vector<LocalizedOrbital> orbitals;
  std::vector<Bond> bonds;

  int size() const { return static_cast<int>(orbitals.size()); }
};

struct LocalizationOptions {
  /// Distance that replaces self-distances; beyond it an atom prefers bonding to itself.
  double c_self = 4.0;
};

/// Number of bonds an element forms. Supports 1 <= Z <= 10.
int valency(int charge);

/// Greedy bond picking: core orbitals on nuclei, valence orbitals at bond midpoints.
OrbitalSet localize_orbitals(const chem::Molecule& molecule, const chem::Frame& frame,
                             const LocalizationOptions& options = {});

/// Short printable tag, e.g. "core(8;1)" or "valence(2)".
std::string type_tag(const OrbitalType& type);

/// Dense index into an orbital-type embedding table of size `kOrbitalTypeCount`.
int type_index(const OrbitalType& type);
inline constexpr int kMaxValenceOrder = 4;
inline constexpr int kOrbitalTypeCount = 10 * 5 + kMaxValenceOrder;

}  // namespace moonlet::topology
