// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace moonlet::chem {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Nucleus {
  Vec3 position;
  int charge = 1;
};

/// A set of nuclei (bohr, integer charges). Immutable after construction.
class Molecule {
 public:
  /// Throws ValidationError on empty input, charges < 1 or coincident nuclei.
  Molecule(std::string name, std::vector<Nucleus> nuclei);

  const std::string& name() const { return name_; }
  const std::vector<Nucleus>& nuclei() const { return nuclei_; }
  int size() const { return static_cast<int>(nuclei_.size()); }
  const Vec3& position(int m) const { return nuclei_[m].position; }
  int charge(int m) const { return nuclei_[m].charge; }
  int total_charge() const;

  /// Rigidly moved copy: x -> rotation * x + shift.
  Molecule transformed(const Mat3& rotation, const Vec3& shift) const;
  /// Copy with nuclei reordered so that new[i] = old[perm[i]].
  Molecule permuted(std::span<const int> perm) const;

 private:
  std::string name_;
  std::vector<Nucleus> nuclei_;
};

/// Electron bookkeeping for a neutral molecule. Electrons [0, n_up) are spin-up.
struct ElectronLayout {
  int n_total = 0;
  int n_up = 0;
  int n_down = 0;

  static ElectronLayout for_molecule(const Molecule& molecule);
  /// 0 for spin-up, 1 for spin-down.
  int spin(int electron) const { return electron < n_up ? 0 : 1; }
};

/// Equivariant coordinate frame: local = rotation^T (global - origin).
struct Frame {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();

  Vec3 to_local(const Vec3& p) const { return rotation.transpose() * (p - origin); }
  Vec3 to_global(const Vec3& p) const { return rotation * p + origin; }
};

/// Charge-weighted PCA frame with deterministic axis signs and tie-breaking.
Frame build_frame(const Molecule& molecule);

std::vector<Vec3> to_frame(const Frame& frame, std::span<const Vec3> points);
std::vector<Vec3> from_frame(const Frame& frame, std::span<const Vec3> points);

}  // namespace moonlet::chem
