// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "moonlet/wf/config.hpp"

namespace moonlet::wf {

/// Where a molecule-specific wave-function parameter lives.
enum class Owner { kAtom, kOrbital, kPair };

/// One kind of emitted parameter, e.g. the per-atom nuclear shift z.
struct ReparamKind {
  std::string name;
  Owner owner = Owner::kAtom;
  int offset = 0;  ///< within the owner's block
  int size = 0;
  /// Standardization target for the moment regularizer: per-index mean, shared scale.
  std::vector<double> mean;
  double scale = 1.0;
  bool bias_free = false;  ///< must vanish with its input (decaying pair gates)
};

/// Filters in the wave function whose first layer and ranges are atom specific.
enum class AtomFilter { kNuclei = 0, kElectrons = 1, kDiffusion = 2 };
inline constexpr int kAtomFilterCount = 3;

/// Layout of the flat vector of raw (pre domain mapping) parameters emitted
/// for one molecule:
///   [atom block] * M, [orbital block] * N_orb, [pair block] * (N_orb * M),
/// pairs ordered orbital-major.
class ReparamLayout {
 public:
  explicit ReparamLayout(const MoonConfig& config);

  const std::vector<ReparamKind>& kinds() const { return kinds_; }
  const ReparamKind& kind(const std::string& name) const;

  int atom_block() const { return block_[0]; }
  int orbital_block() const { return block_[1]; }
  int pair_block() const { return block_[2]; }

  int total(int n_atoms, int n_orbitals) const {
    return n_atoms * atom_block() + n_orbitals * orbital_block() +
           n_orbitals * n_atoms * pair_block();
  }
  int atom_offset(int m) const { return m * atom_block(); }
  int orbital_offset(int n_atoms, int i) const {
    return n_atoms * atom_block() + i * orbital_block();
  }
  int pair_offset(int n_atoms, int n_orbitals, int i, int m) const {
    return n_atoms * atom_block() + n_orbitals * orbital_block() + (i * n_atoms + m) * pair_block();
  }

  // Offsets of individual fields inside their blocks.
  int z = 0;                            ///< hidden_dim
  int w_pair = 0;                       ///< 4 x hidden_dim
  int filter_scale[kAtomFilterCount];   ///< ranges
  int filter_w1[kAtomFilterCount];      ///< 3 x filter_hidden
  int filter_b1[kAtomFilterCount];      ///< filter_hidden
  int orb_w = 0;                        ///< [k][spin block] x hidden_dim
  int orb_b = 0;                        ///< [k][spin block]
  int pi_gate = 0;                      ///< [k][spin block]
  int pi_scale = 0;                     ///< [k][spin block]
  int decay = 0;                        ///< [k][spin block]

 private:
  int add(const std::string& name, Owner owner, int size, std::vector<double> mean, double scale,
          bool bias_free = false);

  std::vector<ReparamKind> kinds_;
  int block_[3] = {0, 0, 0};
};

}  // namespace moonlet::wf
