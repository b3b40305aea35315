// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/globe.hpp"

#include <cmath>

#include "moonlet/ad/math.hpp"

namespace moonlet::wf {

using ad::InitSpec;
using nn::add_param;

namespace {

template <class T>
std::array<T, 3> to_array(const Vec3& x) {
  return {T(x.x()), T(x.y()), T(x.z())};
}

template <class T, class P>
std::vector<T> table_row(const P* params, const nn::ParamRef& table, int row) {
  std::vector<T> out(table.cols);
  for (int c = 0; c < table.cols; ++c) out[c] = T(params[table.offset + row * table.cols + c]);
  return out;
}

template <class T>
std::vector<T> concat(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// 1 + sum_y exp(-|x - y|^2 / s^2) for every receiver x, with s = softplus(raw).
template <class T, class P>
std::vector<T> spatial_norm(std::span<const Vec3> receivers, std::span<const Vec3> senders,
                            const P& raw) {
  using std::exp;
  const P s = ad::softplus(raw);
  const P inv = 1.0 / (s * s);
  std::vector<T> out(receivers.size());
  for (std::size_t i = 0; i < receivers.size(); ++i) {
    T acc(1.0);
    for (const auto& y : senders) acc += exp(T(inv) * (-(receivers[i] - y).squaredNorm()));
    out[i] = acc;
  }
  return out;
}

}  // namespace

Globe::Globe(const GlobeConfig& c, const ReparamLayout& layout, ad::ParamRegistry& reg)
    : config_(c), layout_(&layout) {
  const int e = c.embedding_dim;
  const int m = c.message_dim;
  atom_table_ = add_param(reg, "globe.atom_table", 10, e, InitSpec::normal(1.0));
  orbital_table_ =
      add_param(reg, "globe.orbital_table", topology::kOrbitalTypeCount, e, InitSpec::normal(1.0));
  norm_width_ = add_param(reg, "globe.norm_width", 1, 2, InitSpec::constant(ad::softplus_inverse(2.0)));
  auto make_layer = [&](const std::string& name) {
    Layer layer;
    layer.message = nn::add_dense(reg, name + ".message", 2 * e, m);
    layer.filter = add_filter(reg, name + ".filter", c.filter_hidden, c.filter_ranges, m,
                              c.range_min, c.range_max);
    layer.update = nn::add_mlp(reg, name + ".update", {e + m, e, e}, true, 0.5);
    return layer;
  };
  for (int l = 0; l < c.atom_layers; ++l)
    atom_layers_.push_back(make_layer("globe.atom_layer" + std::to_string(l)));
  for (int l = 0; l < c.orbital_layers; ++l)
    orbital_layers_.push_back(make_layer("globe.orbital_layer" + std::to_string(l)));

  atom_trunk_ = nn::add_mlp(reg, "globe.atom_trunk", {e, e});
  orbital_trunk_ = nn::add_mlp(reg, "globe.orbital_trunk", {e, e});
  pair_in_ = nn::add_dense(reg, "globe.pair.in", 2 * e, e, false);
  pair_filter_ = add_filter(reg, "globe.pair.filter", c.filter_hidden, c.filter_ranges, e,
                            c.range_min, c.range_max);
  pair_trunk_ = nn::add_dense(reg, "globe.pair.trunk", e, e, false);

  const int hh = c.head_hidden;
  for (const auto& kind : layout.kinds()) {
    const std::string name = "globe.head." + kind.name;
    Head head{&kind, {}};
    head.net.layers.push_back(nn::add_dense(reg, name + ".0", e, hh, !kind.bias_free));
    nn::DenseRef out;
    out.w = add_param(reg, name + ".1.w", hh, kind.size,
                      InitSpec::normal(kind.scale / std::sqrt(static_cast<double>(hh))));
    if (!kind.bias_free) out.b = add_param(reg, name + ".1.b", 1, kind.size, InitSpec::per_column(kind.mean));
    head.net.layers.push_back(out);
    heads_.push_back(std::move(head));
  }
}

template <class T, class P>
void Globe::pass(const P* params, const Layer& layer, std::span<const Vec3> receivers,
                 std::span<const Vec3> senders, const std::vector<T>& norm,
                 std::vector<std::vector<T>>& h_recv,
                 const std::vector<std::vector<T>>& h_send) const {
  const int md = config_.message_dim;
  const auto filter = layer.filter.bind(params);
  const auto inv_sq = nn::inverse_square_ranges(filter);
  std::vector<std::vector<T>> messages(receivers.size(), std::vector<T>(md, T(0.0)));
  std::vector<T> g(md), gamma(md);
  for (std::size_t i = 0; i < receivers.size(); ++i) {
    for (std::size_t j = 0; j < senders.size(); ++j) {
      const std::vector<T> in = concat(h_recv[i], h_send[j]);
      nn::dense<T, P>(params, layer.message, std::span<const T>(in), std::span<T>(g));
      nn::silu_inplace<T>(g);
      nn::spatial_filter<T, P>(filter, inv_sq, to_array<T>(receivers[i] - senders[j]),
                               std::span<T>(gamma));
      for (int k = 0; k < md; ++k) messages[i][k] += g[k] * gamma[k];
    }
    const T inv = 1.0 / norm[i];
    for (int k = 0; k < md; ++k) messages[i][k] = messages[i][k] * inv;
  }
  for (std::size_t i = 0; i < receivers.size(); ++i) {
    const std::vector<T> in = concat(h_recv[i], messages[i]);
    const std::vector<T> delta = nn::mlp<T, P>(params, layer.update, std::span<const T>(in));
    for (std::size_t k = 0; k < delta.size(); ++k) h_recv[i][k] += delta[k];
  }
}

template <class T, class P>
GlobeState<T> Globe::embed(const P* params, const System& s) const {
  GlobeState<T> state;
  const std::span<const Vec3> nuclei(s.local_nuclei);
  const std::span<const Vec3> orbitals(s.local_orbitals);
  for (int m = 0; m < s.n_atoms(); ++m)
    state.atoms.push_back(table_row<T, P>(params, atom_table_, s.charge(m) - 1));
  const std::vector<T> atom_norm = spatial_norm<T, P>(nuclei, nuclei, params[norm_width_.offset]);
  for (const auto& layer : atom_layers_) {
    const std::vector<std::vector<T>> senders = state.atoms;
    pass<T, P>(params, layer, nuclei, nuclei, atom_norm, state.atoms, senders);
  }
  for (const auto& orb : s.orbitals.orbitals)
    state.orbitals.push_back(table_row<T, P>(params, orbital_table_, topology::type_index(orb.type)));
  const std::vector<T> orbital_norm =
      spatial_norm<T, P>(orbitals, nuclei, params[norm_width_.offset + 1]);
  for (const auto& layer : orbital_layers_)
    pass<T, P>(params, layer, orbitals, nuclei, orbital_norm, state.orbitals, state.atoms);
  return state;
}

template <class T, class P>
std::vector<T> Globe::pair_embedding(const P* params, const System& s, const GlobeState<T>& state,
                                     int orbital, int atom) const {
  const int e = config_.embedding_dim;
  const std::vector<T> in = concat(state.atoms[atom], state.orbitals[orbital]);
  std::vector<T> h(e), gamma(e);
  nn::dense<T, P>(params, pair_in_, std::span<const T>(in), std::span<T>(h));
  const auto filter = pair_filter_.bind(params);
  const auto inv_sq = nn::inverse_square_ranges(filter);
  nn::spatial_filter<T, P>(filter, inv_sq,
                           to_array<T>(s.local_nuclei[atom] - s.local_orbitals[orbital]),
                           std::span<T>(gamma));
  for (int k = 0; k < e; ++k) h[k] = h[k] * gamma[k];
  return h;
}

template <class T, class P>
std::vector<T> Globe::forward(const P* params, const System& s) const {
  const ReparamLayout& layout = *layout_;
  const int n_atoms = s.n_atoms();
  const int n_orb = s.n_orbitals();
  const GlobeState<T> state = embed<T, P>(params, s);
  std::vector<T> out(layout.total(n_atoms, n_orb), T(0.0));

  auto write = [&](const Head& head, std::span<const T> trunk, int block_offset) {
    const std::vector<T> y = nn::mlp<T, P>(params, head.net, trunk);
    for (int k = 0; k < head.kind->size; ++k) out[block_offset + head.kind->offset + k] = y[k];
  };

  auto trunk = [&](const nn::MlpRef& net, const std::vector<T>& h) {
    std::vector<T> u = nn::mlp<T, P>(params, net, std::span<const T>(h), true);
    nn::layer_norm<T>(std::span<T>(u));
    return u;
  };

  for (int m = 0; m < n_atoms; ++m) {
    const std::vector<T> u = trunk(atom_trunk_, state.atoms[m]);
    for (const auto& head : heads_)
      if (head.kind->owner == Owner::kAtom) write(head, u, layout.atom_offset(m));
  }
  for (int i = 0; i < n_orb; ++i) {
    const std::vector<T> u = trunk(orbital_trunk_, state.orbitals[i]);
    for (const auto& head : heads_)
      if (head.kind->owner == Owner::kOrbital) write(head, u, layout.orbital_offset(n_atoms, i));
  }
  const int e = config_.embedding_dim;
  std::vector<T> t(e);
  for (int i = 0; i < n_orb; ++i)
    for (int m = 0; m < n_atoms; ++m) {
      const std::vector<T> h = pair_embedding<T, P>(params, s, state, i, m);
      nn::dense<T, P>(params, pair_trunk_, std::span<const T>(h), std::span<T>(t));
      nn::silu_inplace<T>(t);
      for (const auto& head : heads_)
        if (head.kind->owner == Owner::kPair)
          write(head, t, layout.pair_offset(n_atoms, n_orb, i, m));
    }
  return out;
}

double normal_moment(int p) {
  if (p % 2 == 1) return 0.0;
  double m = 1.0;
  for (int k = p - 1; k > 1; k -= 2) m *= k;
  return m;
}

template <class T>
T moment_regularizer(std::span<const T> raw, const ReparamLayout& layout, int n_atoms,
                     int n_orbitals, int p_max) {
  T loss(0.0);
  for (const auto& kind : layout.kinds()) {
    std::vector<int> starts;
    switch (kind.owner) {
      case Owner::kAtom:
        for (int m = 0; m < n_atoms; ++m) starts.push_back(layout.atom_offset(m));
        break;
      case Owner::kOrbital:
        for (int i = 0; i < n_orbitals; ++i) starts.push_back(layout.orbital_offset(n_atoms, i));
        break;
      case Owner::kPair:
        for (int i = 0; i < n_orbitals; ++i)
          for (int m = 0; m < n_atoms; ++m)
            starts.push_back(layout.pair_offset(n_atoms, n_orbitals, i, m));
        break;
    }
    const int count = static_cast<int>(starts.size()) * kind.size;
    if (count < 2) continue;
    std::vector<T> sums(p_max + 1, T(0.0));
    for (int start : starts)
      for (int k = 0; k < kind.size; ++k) {
        const T x = (raw[start + kind.offset + k] - kind.mean[k]) * (1.0 / kind.scale);
        T power = x;
        for (int p = 1; p <= p_max; ++p) {
          sums[p] += power;
          if (p < p_max) power = power * x;
        }
      }
    for (int p = 1; p <= p_max; ++p) {
      const T diff = sums[p] * (1.0 / count) - normal_moment(p);
      loss += diff * diff;
    }
  }
  return loss;
}

template GlobeState<double> Globe::embed<double, double>(const double*, const System&) const;
template GlobeState<ad::Var> Globe::embed<ad::Var, ad::Var>(const ad::Var*, const System&) const;
template std::vector<double> Globe::forward<double, double>(const double*, const System&) const;
template std::vector<ad::Var> Globe::forward<ad::Var, ad::Var>(const ad::Var*, const System&) const;
template std::vector<double> Globe::pair_embedding<double, double>(const double*, const System&,
                                                                   const GlobeState<double>&, int,
                                                                   int) const;
template double moment_regularizer<double>(std::span<const double>, const ReparamLayout&, int, int,
                                           int);
template ad::Var moment_regularizer<ad::Var>(std::span<const ad::Var>, const ReparamLayout&, int,
                                             int, int);

}  // namespace moonlet::wf
