// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/nn/layers.hpp"

#include <cmath>

namespace moonlet::nn {

DenseRef add_dense(ad::ParamRegistry& reg, const std::string& name, int in, int out, bool bias,
                   double gain) {
  DenseRef layer;
  layer.w = add_param(reg, name + ".w", in, out, ad::InitSpec::normal(gain / std::sqrt(in)));
  if (bias) layer.b = add_param(reg, name + ".b", 1, out, ad::InitSpec::constant(0.0));
  return layer;
}

MlpRef add_mlp(ad::ParamRegistry& reg, const std::string& name, const std::vector<int>& widths,
               bool bias, double last_gain) {
  MlpRef net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    net.layers.push_back(add_dense(reg, name + "." + std::to_string(l), widths[l], widths[l + 1],
                                   bias, last ? last_gain : 1.0));
  }
  return net;
}

}  // namespace moonlet::nn
