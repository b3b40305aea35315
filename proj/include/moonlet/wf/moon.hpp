// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "moonlet/ad/math.hpp"
#include "moonlet/ad/params.hpp"
#include "moonlet/ad/tape.hpp"
#include "moonlet/nn/layers.hpp"
#include "moonlet/wf/config.hpp"
#include "moonlet/wf/filters.hpp"
#include "moonlet/wf/reparam.hpp"
#include "moonlet/wf/system.hpp"

namespace moonlet::wf {

/// Orbital matrices of one determinant, split into the spin-up and spin-down
/// blocks. Each block is row-major with orbitals as rows and electrons as columns.
template <class T>
struct OrbitalBlocks {
  std::vector<T> up;
  std::vector<T> down;
};

/// log(1 + r) / r, with its limit 1 at r = 0.
template <class T>
T log_rescale(const T& r) {
  using std::log1p;
  const double v = ad::value(r);
  if (v == 0.0) return T(1.0);
  if (v < 1e-4) return 1.0 - r * (0.5 - r * (1.0 / 3.0 - r * (0.25 - r * 0.2)));
  return log1p(r) / r;
}

template <class T>
struct LogAmplitude {
  double sign = 0.0;  ///< 0 when every determinant vanishes
  T log_abs;
};

/// The electronic wave function. Electron coordinates are given in the
/// molecule's local frame as a flat array of N x 3 values, spin-up first.
class Moon {
 public:
  Moon(const MoonConfig& config, const ReparamLayout& layout, ad::ParamRegistry& registry);

  const MoonConfig& config() const { return config_; }

  /// Electron embeddings after diffusion and the skip connection.
  template <class T, class P>
  std::vector<std::vector<T>> embed(const P* params, const P* reparam, const System& system,
                                    std::span<const T> electrons) const;

  /// One OrbitalBlocks per determinant.
  template <class T, class P>
  std::vector<OrbitalBlocks<T>> orbitals(const P* params, const P* reparam, const System& system,
                                         std::span<const T> electrons) const;

  template <class T, class P>
  T jastrow(const P* params, const System& system, std::span<const T> electrons,
            const std::vector<std::vector<T>>& h) const;

  template <class T, class P>
  LogAmplitude<T> log_psi(const P* params, const P* reparam, const System& system,
                          std::span<const T> electrons) const;

 private:
  template <class T, class P>
  std::vector<OrbitalBlocks<T>> orbitals_from(const P* reparam, const System& system,
                                              std::span<const T> electrons,
                                              const std::vector<std::vector<T>>& h) const;

  MoonConfig config_;
  const ReparamLayout* layout_;
  nn::ParamRef norm_width_;  ///< raw widths for the e-e, nuclei, electron and diffusion steps
  std::array<nn::DenseRef, 2> ee_in_;  ///< indexed by same-spin flag
  std::array<FilterRef, 2> ee_filter_;
  nn::DenseRef ee_out_;
  std::array<FilterRef, kAtomFilterCount> atom_filter_;  ///< shared parts only
  std::vector<nn::DenseRef> updates_;
  nn::DenseRef diffusion_self_;
  nn::DenseRef diffusion_message_;
  nn::MlpRef jastrow_mlp_;
  nn::ParamRef jastrow_pair_;  ///< alpha_par, alpha_anti, beta_par, beta_anti
  nn::ParamRef det_weights_;
};

}  // namespace moonlet::wf
