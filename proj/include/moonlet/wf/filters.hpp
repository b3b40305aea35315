// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "moonlet/nn/layers.hpp"

namespace moonlet::wf {

/// A spatial filter whose weights all live in the global parameter vector.
struct FilterRef {
  nn::ParamRef w1, b1, w2, b2, w_env, scale, w_out;

  template <class P>
  nn::FilterWeights<P> bind(const P* base) const {
    return {w1.view(base), b1.ptr(base),    w2.view(base), b2.ptr(base),
            w_env.view(base), scale.ptr(base), w_out.view(base)};
  }
};

/// Registers a full filter: 3 -> hidden -> ranges, envelope mixing, ranges -> out.
FilterRef add_filter(ad::ParamRegistry& reg, const std::string& name, int hidden, int ranges,
                     int out, double range_min, double range_max);

/// Registers only the shared part of a filter whose first layer and ranges are
/// supplied per atom.
FilterRef add_shared_filter(ad::ParamRegistry& reg, const std::string& name, int hidden,
                            int ranges, int out);

}  // namespace moonlet::wf
