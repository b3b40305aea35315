// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "moonlet/ad/params.hpp"
#include "moonlet/nn/layers.hpp"
#include "moonlet/wf/config.hpp"
#include "moonlet/wf/filters.hpp"
#include "moonlet/wf/reparam.hpp"
#include "moonlet/wf/system.hpp"

namespace moonlet::wf {

template <class T>
struct GlobeState {
  std::vector<std::vector<T>> atoms;     ///< final atom embeddings
  std::vector<std::vector<T>> orbitals;  ///< final orbital embeddings
};

/// Graph network over nuclei and localized orbitals that emits the
/// molecule-specific parameters of the wave function.
class Globe {
 public:
  Globe(const GlobeConfig& config, const ReparamLayout& layout, ad::ParamRegistry& registry);

  const GlobeConfig& config() const { return config_; }

  /// Atom message passing followed by atom -> orbital message passing.
  template <class T, class P>
  GlobeState<T> embed(const P* params, const System& system) const;

  /// Raw emitted parameters laid out by ReparamLayout.
  template <class T, class P>
  std::vector<T> forward(const P* params, const System& system) const;

  /// Pair embeddings h^{a-o} for orbital i and atom m (exposed for tests).
  template <class T, class P>
  std::vector<T> pair_embedding(const P* params, const System& system, const GlobeState<T>& state,
                                int orbital, int atom) const;

 private:
  struct Layer {
    nn::DenseRef message;  ///< [receiver, sender] -> message_dim
    FilterRef filter;
    nn::MlpRef update;  ///< [h, m] -> embedding_dim
  };
  struct Head {
    const ReparamKind* kind;
    nn::MlpRef net;
  };

  template <class T, class P>
  void pass(const P* params, const Layer& layer, std::span<const Vec3> receivers,
            std::span<const Vec3> senders, const std::vector<T>& norm,
            std::vector<std::vector<T>>& h_recv, const std::vector<std::vector<T>>& h_send) const;

  GlobeConfig config_;
  const ReparamLayout* layout_;
  nn::ParamRef atom_table_;
  nn::ParamRef orbital_table_;
  nn::ParamRef norm_width_;  ///< raw widths of the atom and orbital normalizations
  std::vector<Layer> atom_layers_;
  std::vector<Layer> orbital_layers_;
  nn::MlpRef atom_trunk_;
  nn::MlpRef orbital_trunk_;
  nn::DenseRef pair_in_;
  FilterRef pair_filter_;
  nn::DenseRef pair_trunk_;
  std::vector<Head> heads_;
};

/// Sum over kinds of sum_p (mean(x^p) - m_p)^2 with x standardized by the kind's
/// target; m_p = 0 for odd p and (p-1)!! for even p. Kinds with fewer than two
/// entries in the molecule are skipped.
template <class T>
T moment_regularizer(std::span<const T> raw, const ReparamLayout& layout, int n_atoms,
                     int n_orbitals, int p_max = 4);

/// Target moments of a standard normal: 0 for odd p, (p-1)!! for even p.
double normal_moment(int p);

}  // namespace moonlet::wf
