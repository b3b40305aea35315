// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/vmc/sampler.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "moonlet/vmc/parallel.hpp"

namespace moonlet::vmc {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xc2b2ae3d27d4eb4full);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kInitStream = ~0ull;

}  // namespace

WalkerSet init_walkers(const wf::System& system, int count, std::uint64_t seed, double width) {
  const int n = system.n_electrons();
  std::vector<int> slots;
  for (int m = 0; m < system.n_atoms(); ++m)
    for (int k = 0; k < system.charge(m); ++k) slots.push_back(m);
  // Electron order interleaves spins: up0, down0, up1, down1, ...
  std::vector<int> home(n);
  int slot = 0;
  const int n_up = system.layout.n_up;
  for (int k = 0; k < std::max(n_up, system.layout.n_down); ++k) {
    if (k < n_up) home[k] = slots[slot++ % slots.size()];
    if (k < system.layout.n_down) home[n_up + k] = slots[slot++ % slots.size()];
  }
  WalkerSet w;
  w.dim = 3 * n;
  w.seed = seed;
  w.width = width;
  w.positions.resize(static_cast<size_t>(count) * w.dim);
  w.log_abs.assign(count, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < count; ++k) {
    std::mt19937_64 rng(stream_seed(seed, kInitStream, k));
    std::normal_distribution<double> normal;
    auto x = w.walker(k);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) x[3 * i + c] = system.molecule.position(home[i])[c] + normal(rng);
  }
  return w;
}

WalkerSet init_walkers(int dim, int count, std::uint64_t seed, double width) {
  WalkerSet w;
  w.dim = dim;
  w.seed = seed;
  w.width = width;
  w.positions.resize(static_cast<size_t>(count) * dim);
  w.log_abs.assign(count, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < count; ++k) {
    std::mt19937_64 rng(stream_seed(seed, kInitStream, k));
    std::normal_distribution<double> normal;
    for (auto& v : w.walker(k)) v = normal(rng);
  }
  return w;
}

void refresh_log_abs(WalkerSet& walkers, const LogAmplitudeFn& log_abs) {
  parallel_for(walkers.size(), [&](int k) { walkers.log_abs[k] = log_abs(walkers.walker(k)); });
}

double mh_iteration(WalkerSet& walkers, const LogAmplitudeFn& log_abs, const MHOptions& options) {
  const int count = walkers.size();
  std::vector<int> accepted(count, 0);
  const double width = walkers.width;
  parallel_for(count, [&](int k) {
    std::mt19937_64 rng(stream_seed(walkers.seed, walkers.counter, k));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    auto x = walkers.walker(k);
    std::vector<double> proposal(x.size());
    double current = walkers.log_abs[k];
    for (int s = 0; s < options.substeps; ++s) {
      for (std::size_t c = 0; c < x.size(); ++c) proposal[c] = x[c] + width * normal(rng);
      const double u = uniform(rng);
      const double next = log_abs(proposal);
      if (!std::isfinite(next)) continue;
      if (!std::isfinite(current) || std::log(u) < 2.0 * (next - current)) {
        std::copy(proposal.begin(), proposal.end(), x.begin());
        current = next;
        ++accepted[k];
      }
    }
    walkers.log_abs[k] = current;
  });
  long total = 0;
  for (int a : accepted) total += a;
  walkers.pmove = count > 0 && options.substeps > 0
                      ? static_cast<double>(total) / (static_cast<double>(count) * options.substeps)
                      : 0.0;
  ++walkers.counter;
  if (options.adapt) walkers.width *= std::exp(options.kappa * (walkers.pmove - options.target));
  return walkers.pmove;
}

}  // namespace moonlet::vmc
