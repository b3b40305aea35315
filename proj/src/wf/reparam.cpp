// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/reparam.hpp"

#include <cmath>

#include "moonlet/ad/math.hpp"
#include "moonlet/errors.hpp"

namespace moonlet::wf {

namespace {

std::vector<double> constant(int n, double v) { return std::vector<double>(n, v); }

}  // namespace

ReparamLayout::ReparamLayout(const MoonConfig& c) {
  const int d = c.hidden_dim;
  const int h = c.filter_hidden;
  const int r = c.filter_ranges;
  const int kd = 2 * c.determinants;
  const char* filters[] = {"nuclei", "electrons", "diffusion"};

  z = add("z", Owner::kAtom, d, constant(d, 0.0), 1.0);
  w_pair = add("w_pair", Owner::kAtom, 4 * d, constant(4 * d, 0.0), 0.5);
  for (int f = 0; f < kAtomFilterCount; ++f) {
    const std::string base = std::string("filter.") + filters[f];
    std::vector<double> ranges(r);
    for (int i = 0; i < r; ++i) {
      const double t = r > 1 ? static_cast<double>(i) / (r - 1) : 0.0;
      ranges[i] = ad::softplus_inverse(c.range_min * std::pow(c.range_max / c.range_min, t));
    }
    filter_scale[f] = add(base + ".scale", Owner::kAtom, r, ranges, 0.5);
    filter_w1[f] = add(base + ".w1", Owner::kAtom, 3 * h, constant(3 * h, 0.0), 1.0 / std::sqrt(3.0));
    filter_b1[f] = add(base + ".b1", Owner::kAtom, h, constant(h, 0.0), 0.5);
  }
  orb_w = add("orbital.w", Owner::kOrbital, kd * d, constant(kd * d, 0.0), 1.0 / std::sqrt(d));
  orb_b = add("orbital.b", Owner::kOrbital, kd, constant(kd, 1.0), 0.5);
  pi_gate = add("pair.gate", Owner::kPair, kd, constant(kd, 0.0), 1.0, true);
  pi_scale = add("pair.scale", Owner::kPair, kd, constant(kd, ad::softplus_inverse(1.0)), 0.5);
  decay = add("pair.decay", Owner::kPair, kd, constant(kd, ad::softplus_inverse(1.0)), 0.5);
}

int ReparamLayout::add(const std::string& name, Owner owner, int size, std::vector<double> mean,
                       double scale, bool bias_free) {
  int& block = block_[static_cast<int>(owner)];
  const int offset = block;
  kinds_.push_back({name, owner, offset, size, std::move(mean), scale, bias_free});
  block += size;
  return offset;
}

const ReparamKind& ReparamLayout::kind(const std::string& name) const {
  for (const auto& k : kinds_)
    if (k.name == name) return k;
  throw ConfigError("unknown reparametrized parameter '" + name + "'");
}

}  // namespace moonlet::wf
