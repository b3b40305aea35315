// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/ad/tape.hpp"

namespace moonlet::ad {

Tape*& active_tape() {
  thread_local Tape* tape = nullptr;
  return tape;
}

void Tape::clear() {
  offsets_.assign(1, 0);
  parents_.clear();
  partials_.clear();
}

void Tape::reserve(int nodes, int edges) {
  offsets_.reserve(nodes + 1);
  parents_.reserve(edges);
  partials_.reserve(edges);
}

int Tape::add_node(std::span<const int> parents, std::span<const double> partials) {
  parents_.insert(parents_.end(), parents.begin(), parents.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  offsets_.push_back(static_cast<int>(parents_.size()));
  return size() - 1;
}

int Tape::add_unary(int parent, double partial) {
  parents_.push_back(parent);
  partials_.push_back(partial);
  offsets_.push_back(static_cast<int>(parents_.size()));
  return size() - 1;
}

int Tape::add_binary(int a, double da, int b, double db) {
  parents_.push_back(a);
  partials_.push_back(da);
  parents_.push_back(b);
  partials_.push_back(db);
  offsets_.push_back(static_cast<int>(parents_.size()));
  return size() - 1;
}

void Tape::backward(std::vector<double>& adjoint) const { backward(adjoint, size()); }

void Tape::backward(std::vector<double>& adjoint, int end) const {
  for (int node = end - 1; node >= 0; --node) {
    const double a = adjoint[node];
    if (a == 0.0) continue;
    for (int e = offsets_[node]; e < offsets_[node + 1]; ++e)
      adjoint[parents_[e]] += a * partials_[e];
  }
}

void Tape::backward_batch(std::span<double> adjoint, int width) const {
  for (int node = size() - 1; node >= 0; --node) {
    const double* a = adjoint.data() + static_cast<std::size_t>(node) * width;
    bool any = false;
    for (int k = 0; k < width && !any; ++k) any = a[k] != 0.0;
    if (!any) continue;
    for (int e = offsets_[node]; e < offsets_[node + 1]; ++e) {
      double* p = adjoint.data() + static_cast<std::size_t>(parents_[e]) * width;
      const double w = partials_[e];
      for (int k = 0; k < width; ++k) p[k] += w * a[k];
    }
  }
}

Var linear_combination(std::span<const Var> x, std::span<const double> c, double offset) {
  thread_local std::vector<int> parents;
  thread_local std::vector<double> partials;
  parents.clear();
  partials.clear();
  double v = offset;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v += c[i] * x[i].v;
    if (x[i].id >= 0 && c[i] != 0.0) {
      parents.push_back(x[i].id);
      partials.push_back(c[i]);
    }
  }
  if (parents.empty()) return Var(v);
  return {v, active_tape()->add_node(parents, partials)};
}

}  // namespace moonlet::ad
