// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/moon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "moonlet/ad/lap.hpp"
#include "moonlet/ad/tape.hpp"

namespace moonlet::wf {

using ad::InitSpec;
using ad::MatView;
using nn::add_param;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

template <class T>
using Vec3T = std::array<T, 3>;

template <class T>
T squared_norm(const Vec3T<T>& a) {
  return a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
}

template <class T>
Vec3T<T> electron(std::span<const T> x, int i) {
  return {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
}

template <class T>
Vec3T<T> minus(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <class T>
Vec3T<T> minus(const Vec3T<T>& a, const Vec3& b) {
  return {a[0] - b.x(), a[1] - b.y(), a[2] - b.z()};
}

// [x, |x|] scaled by log(1 + |x|) / |x|.
template <class T>
std::array<T, 4> log_features(const Vec3T<T>& x, const T& r) {
  const T s = log_rescale(r);
  return {x[0] * s, x[1] * s, x[2] * s, r * s};
}

// Transposes an orbital-major block so that each row belongs to one electron.
template <class T>
std::vector<T> electron_major(const std::vector<T>& block, int n) {
  std::vector<T> out(block.size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out[c * n + r] = block[r * n + c];
  return out;
}

// Electron indices sorted by position. Sums over electrons run in this order so
// that relabeling same-spin electrons leaves every sum bit-identical.
template <class T>
std::vector<int> summation_order(std::span<const T> x, const System& s) {
  std::vector<int> order(s.n_electrons());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int i) {
    return std::make_tuple(ad::value(x[3 * i]), ad::value(x[3 * i + 1]), ad::value(x[3 * i + 2]),
                           s.layout.spin(i));
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  return order;
}

template <class P>
P inverse_square_width(const P& raw) {
  const P s = ad::softplus(raw);
  return 1.0 / (s * s);
}

template <class T>
void add_product(std::vector<T>& acc, const std::vector<T>& a, const std::vector<T>& b) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += a[k] * b[k];
}

template <class T>
void scale(std::vector<T>& v, const T& s) {
  for (auto& x : v) x = x * s;
}

}  // namespace

Moon::Moon(const MoonConfig& c, const ReparamLayout& layout, ad::ParamRegistry& reg)
    : config_(c), layout_(&layout) {
  const int d = c.hidden_dim;
  norm_width_ = add_param(reg, "moon.norm_width", 1, 4, InitSpec::constant(ad::softplus_inverse(1.0)));
  const char* spin[] = {"anti", "par"};
  for (int s = 0; s < 2; ++s) {
    const std::string base = std::string("moon.ee.") + spin[s];
    ee_in_[s] = nn::add_dense(reg, base + ".in", 4, c.ee_dim);
    ee_filter_[s] = add_filter(reg, base + ".filter", c.filter_hidden, c.filter_ranges, c.ee_dim,
                               c.range_min, c.range_max);
  }
  ee_out_ = nn::add_dense(reg, "moon.ee.out", c.ee_dim, d, false);
  const char* filters[] = {"nuclei", "electrons", "diffusion"};
  for (int f = 0; f < kAtomFilterCount; ++f)
    atom_filter_[f] = add_shared_filter(reg, std::string("moon.filter.") + filters[f],
                                        c.filter_hidden, c.filter_ranges, d);
  for (int l = 0; l < c.updates; ++l)
    updates_.push_back(nn::add_dense(reg, "moon.update" + std::to_string(l), 2 * d, d));
  diffusion_self_ = nn::add_dense(reg, "moon.diffusion.self", d, d, false);
  diffusion_message_ = nn::add_dense(reg, "moon.diffusion.message", 2 * d, d);
  jastrow_mlp_ = nn::add_mlp(reg, "moon.jastrow.mlp", {d, c.jastrow_hidden, 1}, true, 0.0);
  jastrow_pair_ = add_param(reg, "moon.jastrow.pair", 1, 4, InitSpec::constant(1.0));
  det_weights_ = add_param(reg, "moon.det_weights", 1, c.determinants, InitSpec::constant(1.0));
}

template <class T, class P>
std::vector<std::vector<T>> Moon::embed(const P* params, const P* reparam, const System& s,
                                        std::span<const T> x) const {
  using std::exp;
  using std::sqrt;
  const ReparamLayout& layout = *layout_;
  const int n = s.n_electrons();
  const int n_atoms = s.n_atoms();
  const int d = config_.hidden_dim;
  const int ee = config_.ee_dim;
  const P* widths = params + norm_width_.offset;
  const std::vector<int> order = summation_order(x, s);

  // Electron-electron initialization.
  std::vector<std::vector<T>> h0(n, std::vector<T>(d, T(0.0)));
  {
    std::array<nn::FilterWeights<P>, 2> fw = {ee_filter_[0].bind(params), ee_filter_[1].bind(params)};
    std::array<std::vector<P>, 2> inv = {nn::inverse_square_ranges(fw[0]),
                                         nn::inverse_square_ranges(fw[1])};
    std::vector<T> acc(ee), a(ee), gamma(ee);
    for (int i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), T(0.0));
      for (int j : order) {
        const int same = s.layout.spin(i) == s.layout.spin(j) ? 1 : 0;
        const Vec3T<T> diff = minus(electron(x, i), electron(x, j));
        const T r = sqrt(squared_norm(diff));
        const std::array<T, 4> g = log_features(diff, r);
        nn::dense<T, P>(params, ee_in_[same], std::span<const T>(g), std::span<T>(a));
        nn::silu_inplace<T>(a);
        nn::spatial_filter<T, P>(fw[same], inv[same], diff, std::span<T>(gamma));
        add_product(acc, a, gamma);
      }
      nn::dense<T, P>(params, ee_out_, std::span<const T>(acc), std::span<T>(h0[i]));
    }
    const P inv_mu = inverse_square_width(widths[0]);
    for (int i = 0; i < n; ++i) {
      T mu(1.0);
      for (int m = 0; m < n_atoms; ++m) {
        const T r2 = squared_norm(minus(electron(x, i), s.local_nuclei[m]));
        mu += exp(-(r2 * T(inv_mu))) * (0.5 * s.charge(m));
      }
      scale(h0[i], T(1.0 / mu));
    }
  }

  // Electron-nucleus pairs aggregated towards nuclei (per spin) and electrons.
  std::vector<std::array<nn::FilterWeights<P>, kAtomFilterCount>> fw(n_atoms);
  std::vector<std::array<std::vector<P>, kAtomFilterCount>> inv(n_atoms);
  for (int m = 0; m < n_atoms; ++m) {
    const P* block = reparam + layout.atom_offset(m);
    for (int f = 0; f < kAtomFilterCount; ++f) {
      const FilterRef& shared = atom_filter_[f];
      fw[m][f] = {MatView<P>{block + layout.filter_w1[f], 3, config_.filter_hidden},
                  block + layout.filter_b1[f],
                  shared.w2.view(params),
                  shared.b2.ptr(params),
                  shared.w_env.view(params),
                  block + layout.filter_scale[f],
                  shared.w_out.view(params)};
      inv[m][f] = nn::inverse_square_ranges(fw[m][f]);
    }
  }
  std::array<std::vector<std::vector<T>>, 2> hn;
  for (auto& v : hn) v.assign(n_atoms, std::vector<T>(d, T(0.0)));
  std::vector<std::vector<T>> he(n, std::vector<T>(d, T(0.0)));
  std::vector<std::vector<std::vector<T>>> gamma_diff(n, std::vector<std::vector<T>>(n_atoms));
  std::vector<T> pair(d), gamma(d);
  for (int i : order) {
    for (int m = 0; m < n_atoms; ++m) {
      const P* block = reparam + layout.atom_offset(m);
      const Vec3T<T> diff = minus(electron(x, i), s.local_nuclei[m]);
      const T r = sqrt(squared_norm(diff));
      const std::array<T, 4> g = log_features(diff, r);
      ad::affine(std::span<const T>(g), MatView<P>{block + layout.w_pair, 4, d}, block + layout.z,
                 std::span<T>(pair));
      for (int k = 0; k < d; ++k) pair[k] += h0[i][k];
      nn::silu_inplace<T>(pair);
      nn::spatial_filter<T, P>(fw[m][0], inv[m][0], diff, std::span<T>(gamma));
      add_product(hn[s.layout.spin(i)][m], pair, gamma);
      nn::spatial_filter<T, P>(fw[m][1], inv[m][1], diff, std::span<T>(gamma));
      add_product(he[i], pair, gamma);
      gamma_diff[i][m].resize(d);
      nn::spatial_filter<T, P>(fw[m][2], inv[m][2], diff, std::span<T>(gamma_diff[i][m]));
    }
  }
  const P inv_nuc = inverse_square_width(widths[1]);
  for (int m = 0; m < n_atoms; ++m) {
    P nu(1.0);
    for (int k = 0; k < n_atoms; ++k)
      nu += exp(inv_nuc * (-(s.local_nuclei[m] - s.local_nuclei[k]).squaredNorm()));
    const T inv_nu(1.0 / nu);
    scale(hn[0][m], inv_nu);
    scale(hn[1][m], inv_nu);
  }
  const P inv_elec = inverse_square_width(widths[2]);
  const P inv_diff = inverse_square_width(widths[3]);
  std::vector<T> nu_diff(n);
  for (int i = 0; i < n; ++i) {
    T nu_e(1.0), nu_d(1.0);
    for (int m = 0; m < n_atoms; ++m) {
      const T r2 = squared_norm(minus(electron(x, i), s.local_nuclei[m]));
      nu_e += exp(-(r2 * T(inv_elec)));
      nu_d += exp(-(r2 * T(inv_diff)));
    }
    scale(he[i], T(1.0 / nu_e));
    nu_diff[i] = 1.0 / nu_d;
  }

  // Nuclear updates.
  std::vector<T> cat(2 * d), upd(d);
  for (const auto& layer : updates_) {
    std::array<std::vector<std::vector<T>>, 2> next = hn;
    for (int m = 0; m < n_atoms; ++m)
      for (int a = 0; a < 2; ++a) {
        std::copy(hn[a][m].begin(), hn[a][m].end(), cat.begin());
        std::copy(hn[1 - a][m].begin(), hn[1 - a][m].end(), cat.begin() + d);
        nn::dense<T, P>(params, layer, std::span<const T>(cat), std::span<T>(upd));
        nn::silu_inplace<T>(upd);
        for (int k = 0; k < d; ++k) next[a][m][k] = (hn[a][m][k] + upd[k]) * kInvSqrt2;
      }
    hn.swap(next);
  }

  // Diffusion back to the electrons.
  std::array<std::vector<std::vector<T>>, 2> outgoing;
  for (int a = 0; a < 2; ++a) {
    outgoing[a].assign(n_atoms, std::vector<T>(d));
    for (int m = 0; m < n_atoms; ++m) {
      std::copy(hn[a][m].begin(), hn[a][m].end(), cat.begin());
      std::copy(hn[1 - a][m].begin(), hn[1 - a][m].end(), cat.begin() + d);
      nn::dense<T, P>(params, diffusion_message_, std::span<const T>(cat),
                      std::span<T>(outgoing[a][m]));
    }
  }
  std::vector<std::vector<T>> h(n, std::vector<T>(d));
  std::vector<T> msg(d);
  for (int i = 0; i < n; ++i) {
    std::fill(msg.begin(), msg.end(), T(0.0));
    for (int m = 0; m < n_atoms; ++m) add_product(msg, outgoing[s.layout.spin(i)][m], gamma_diff[i][m]);
    nn::dense<T, P>(params, diffusion_self_, std::span<const T>(he[i]), std::span<T>(upd));
    for (int k = 0; k < d; ++k) upd[k] += msg[k] * nu_diff[i];
    nn::silu_inplace<T>(upd);
    for (int k = 0; k < d; ++k) h[i][k] = (upd[k] + he[i][k]) * kInvSqrt2;
  }
  return h;
}

template <class T, class P>
std::vector<OrbitalBlocks<T>> Moon::orbitals_from(const P* reparam, const System& s,
                                                  std::span<const T> x,
                                                  const std::vector<std::vector<T>>& h) const {
  using std::exp;
  using std::sqrt;
  using std::tanh;
  const ReparamLayout& layout = *layout_;
  const int n_atoms = s.n_atoms();
  const int n_orb = s.n_orbitals();
  const int d = config_.hidden_dim;
  const int n_up = s.layout.n_up;
  const int n_down = s.layout.n_down;

  std::vector<std::vector<T>> dist(s.n_electrons(), std::vector<T>(n_atoms));
  for (int j = 0; j < s.n_electrons(); ++j)
    for (int m = 0; m < n_atoms; ++m)
      dist[j][m] = sqrt(squared_norm(minus(electron(x, j), s.local_nuclei[m])));

  std::vector<OrbitalBlocks<T>> out(config_.determinants);
  std::vector<P> coef(n_atoms), decay(n_atoms);
  T pre[1];
  for (int k = 0; k < config_.determinants; ++k) {
    for (int spin = 0; spin < 2; ++spin) {
      const int n_s = spin == 0 ? n_up : n_down;
      const int first = spin == 0 ? 0 : n_up;
      const int q = 2 * k + spin;
      std::vector<T>& block = spin == 0 ? out[k].up : out[k].down;
      block.assign(n_s * n_s, T(0.0));
      for (int i = 0; i < n_s; ++i) {
        const P* orb = reparam + layout.orbital_offset(n_atoms, i);
        for (int m = 0; m < n_atoms; ++m) {
          const P* pair = reparam + layout.pair_offset(n_atoms, n_orb, i, m);
          coef[m] = tanh(pair[layout.pi_gate + q]) * ad::softplus(pair[layout.pi_scale + q]);
          decay[m] = ad::softplus(pair[layout.decay + q]);
        }
        const MatView<P> w{orb + layout.orb_w + q * d, d, 1};
        for (int j = 0; j < n_s; ++j) {
          ad::affine(std::span<const T>(h[first + j]), w, orb + layout.orb_b + q,
                     std::span<T>(pre, 1));
          T env(0.0);
          for (int m = 0; m < n_atoms; ++m)
            env += exp(dist[first + j][m] * T(-decay[m])) * T(coef[m]);
          block[i * n_s + j] = pre[0] * env;
        }
      }
    }
  }
  return out;
}

template <class T, class P>
std::vector<OrbitalBlocks<T>> Moon::orbitals(const P* params, const P* reparam, const System& s,
                                             std::span<const T> x) const {
  return orbitals_from<T, P>(reparam, s, x, embed<T, P>(params, reparam, s, x));
}

template <class T, class P>
T Moon::jastrow(const P* params, const System& s, std::span<const T> x,
                const std::vector<std::vector<T>>& h) const {
  using std::sqrt;
  const std::vector<int> order = summation_order(x, s);
  T j(0.0);
  for (int i : order) j += nn::mlp<T, P>(params, jastrow_mlp_, std::span<const T>(h[i]))[0];
  const P* pair = params + jastrow_pair_.offset;
  // Same spin: -1/4 beta a^2 / (a + r); opposite spin: -1/2 beta a^2 / (a + r).
  const std::array<P, 2> alpha = {pair[1], pair[0]};
  const std::array<P, 2> weight = {pair[3] * alpha[0] * alpha[0] * -0.5,
                                   pair[2] * alpha[1] * alpha[1] * -0.25};
  const int n = s.n_electrons();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const int i = order[a], k = order[b];
      const int same = s.layout.spin(i) == s.layout.spin(k) ? 1 : 0;
      const T r = sqrt(squared_norm(minus(electron(x, i), electron(x, k))));
      j += T(weight[same]) / (r + T(alpha[same]));
    }
  return j;
}

template <class T, class P>
LogAmplitude<T> Moon::log_psi(const P* params, const P* reparam, const System& s,
                              std::span<const T> x) const {
  using std::abs;
  using std::exp;
  using std::log;
  const auto h = embed<T, P>(params, reparam, s, x);
  const auto blocks = orbitals_from<T, P>(reparam, s, x, h);
  const int n_up = s.layout.n_up;
  const int n_down = s.layout.n_down;
  const P* weights = params + det_weights_.offset;

  std::vector<double> signs;
  std::vector<T> logs;
  for (int k = 0; k < config_.determinants; ++k) {
    const auto up = ad::slogdet<T>(electron_major(blocks[k].up, n_up), n_up);
    ad::SignedLog<T> down{1.0, T(0.0)};
    if (n_down > 0) down = ad::slogdet<T>(electron_major(blocks[k].down, n_down), n_down);
    const double w = ad::value(weights[k]);
    const double sign = up.sign * down.sign * (w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0));
    if (sign == 0.0) continue;
    signs.push_back(sign);
    logs.push_back(up.log_abs + down.log_abs + T(log(abs(weights[k]))));
  }
  LogAmplitude<T> out;
  if (signs.empty()) {
    out.sign = 0.0;
    out.log_abs = T(-std::numeric_limits<double>::infinity());
    return out;
  }
  const T jastrow_term = jastrow<T, P>(params, s, x, h);
  if (signs.size() == 1) {
    out.sign = signs[0];
    out.log_abs = logs[0] + jastrow_term;
    return out;
  }
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& l : logs) shift = std::max(shift, ad::value(l));
  T sum(0.0);
  for (std::size_t k = 0; k < logs.size(); ++k) sum += exp(logs[k] - shift) * signs[k];
  const double total = ad::value(sum);
  if (total == 0.0) {
    out.sign = 0.0;
    out.log_abs = T(-std::numeric_limits<double>::infinity());
    return out;
  }
  out.sign = total > 0 ? 1.0 : -1.0;
  out.log_abs = log(abs(sum)) + shift + jastrow_term;
  return out;
}

#define MOONLET_INSTANTIATE_MOON(T, P)                                                            \
  template std::vector<std::vector<T>> Moon::embed<T, P>(const P*, const P*, const System&,      \
                                                         std::span<const T>) const;              \
  template std::vector<OrbitalBlocks<T>> Moon::orbitals<T, P>(const P*, const P*, const System&, \
                                                              std::span<const T>) const;         \
  template T Moon::jastrow<T, P>(const P*, const System&, std::span<const T>,                    \
                                 const std::vector<std::vector<T>>&) const;                      \
  template LogAmplitude<T> Moon::log_psi<T, P>(const P*, const P*, const System&,                \
                                               std::span<const T>) const;

MOONLET_INSTANTIATE_MOON(double, double)
MOONLET_INSTANTIATE_MOON(ad::Var, ad::Var)
MOONLET_INSTANTIATE_MOON(ad::Lap<3>, double)
MOONLET_INSTANTIATE_MOON(ad::Lap<6>, double)
MOONLET_INSTANTIATE_MOON(ad::Lap<12>, double)
MOONLET_INSTANTIATE_MOON(ad::Lap<24>, double)
MOONLET_INSTANTIATE_MOON(ad::Lap<48>, double)

#undef MOONLET_INSTANTIATE_MOON

}  // namespace moonlet::wf
