// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "moonlet/wf/system.hpp"

namespace moonlet::vmc {

/// log|psi| of one configuration; -infinity where psi vanishes.
using LogAmplitudeFn = std::function<double(std::span<const double>)>;

/// Walker positions for one molecule. Random numbers come from per-walker
/// streams keyed by (seed, counter, walker), so results do not depend on the
/// number of threads.
struct WalkerSet {
  int dim = 0;  ///< coordinates per walker
  std::vector<double> positions;
  std::vector<double> log_abs;
  double width = 0.5;
  double pmove = 0.0;  ///< acceptance rate of the last iteration
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  int size() const { return dim > 0 ? static_cast<int>(positions.size()) / dim : 0; }
  std::span<double> walker(int w) { return {positions.data() + w * dim, static_cast<size_t>(dim)}; }
  std::span<const double> walker(int w) const {
    return {positions.data() + w * dim, static_cast<size_t>(dim)};
  }
};

/// SplitMix64 finalizer applied to a combination of the inputs.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Electrons placed on nuclei plus unit Gaussian noise. Electrons alternate
/// spin-up and spin-down over the nuclear slots (Z_m slots per nucleus).
WalkerSet init_walkers(const wf::System& system, int count, std::uint64_t seed,
                       double width = 0.5);

/// Walkers drawn from a standard normal in `dim` dimensions (for toy densities).
WalkerSet init_walkers(int dim, int count, std::uint64_t seed, double width = 0.5);

void refresh_log_abs(WalkerSet& walkers, const LogAmplitudeFn& log_abs);

struct MHOptions {
  int substeps = 40;
  double target = 0.5;  ///< target acceptance rate
  double kappa = 0.1;   ///< width adaptation rate
  bool adapt = true;
};

/// `substeps` all-coordinate Gaussian Metropolis-Hastings moves on psi^2, then
/// width <- width * exp(kappa * (pmove - target)). Returns pmove.
double mh_iteration(WalkerSet& walkers, const LogAmplitudeFn& log_abs, const MHOptions& options);

}  // namespace moonlet::vmc
