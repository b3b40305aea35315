// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/filters.hpp"

#include <cmath>

namespace moonlet::wf {

using ad::InitSpec;
using nn::add_param;

FilterRef add_shared_filter(ad::ParamRegistry& reg, const std::string& name, int hidden,
                            int ranges, int out) {
  FilterRef f;
  f.w2 = add_param(reg, name + ".w2", hidden, ranges, InitSpec::normal(1.0 / std::sqrt(hidden)));
  f.b2 = add_param(reg, name + ".b2", 1, ranges, InitSpec::constant(1.0));
  f.w_env = add_param(reg, name + ".w_env", ranges, ranges, InitSpec::normal(1.0 / std::sqrt(ranges)));
  f.w_out = add_param(reg, name + ".w_out", ranges, out, InitSpec::normal(1.0 / std::sqrt(ranges)));
  return f;
}

FilterRef add_filter(ad::ParamRegistry& reg, const std::string& name, int hidden, int ranges,
                     int out, double range_min, double range_max) {
  FilterRef f;
  f.w1 = add_param(reg, name + ".w1", 3, hidden, InitSpec::normal(1.0 / std::sqrt(3.0)));
  f.b1 = add_param(reg, name + ".b1", 1, hidden, InitSpec::constant(0.0));
  const FilterRef shared = add_shared_filter(reg, name, hidden, ranges, out);
  f.w2 = shared.w2;
  f.b2 = shared.b2;
  f.w_env = shared.w_env;
  f.w_out = shared.w_out;
  f.scale = add_param(reg, name + ".scale", 1, ranges, InitSpec::softplus_log_spaced(range_min, range_max));
  return f;
}

}  // namespace moonlet::wf
