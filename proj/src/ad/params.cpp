// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/ad/params.hpp"

#include <cmath>
#include <random>

#include "moonlet/ad/math.hpp"
#include "moonlet/errors.hpp"

namespace moonlet::ad {

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int ParamRegistry::add(const std::string& name, int rows, int cols, InitSpec init) {
  if (rows <= 0 || cols <= 0)
    throw ConfigError("parameter '" + name + "' has an empty shape");
  if (index_.count(name)) throw ConfigError("parameter '" + name + "' registered twice");
  index_[name] = static_cast<int>(entries_.size());
  entries_.push_back({name, size_, rows, cols, init, false});
  size_ += rows * cols;
  return entries_.back().offset;
}

const ParamEntry& ParamRegistry::entry(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return entries_[it->second];
}

int ParamRegistry::freeze(const std::string& prefix) {
  int count = 0;
  for (auto& e : entries_)
    if (e.name.rfind(prefix, 0) == 0) {
      e.frozen = true;
      ++count;
    }
  return count;
}

Eigen::VectorXd ParamRegistry::trainable_mask() const {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(size_);
  for (const auto& e : entries_)
    if (e.frozen) mask.segment(e.offset, e.size()).setZero();
  return mask;
}

Eigen::VectorXd ParamRegistry::initialize(std::uint64_t seed) const {
  Eigen::VectorXd flat(size_);
  for (const auto& e : entries_) {
    std::mt19937_64 rng(fnv1a(e.name, seed ^ 0x9e3779b97f4a7c15ull));
    std::normal_distribution<double> normal(e.init.a, e.init.b);
    for (int r = 0; r < e.rows; ++r)
      for (int c = 0; c < e.cols; ++c) {
        double v = e.init.a;
        const double t = e.cols > 1 ? static_cast<double>(c) / (e.cols - 1) : 0.0;
        switch (e.init.kind) {
          case InitSpec::Kind::kConstant:
            break;
          case InitSpec::Kind::kNormal:
            v = normal(rng);
            break;
          case InitSpec::Kind::kLogSpaced:
            v = e.init.a * std::pow(e.init.b / e.init.a, t);
            break;
          case InitSpec::Kind::kSoftplusLogSpaced:
            v = softplus_inverse(e.init.a * std::pow(e.init.b / e.init.a, t));
            break;
          case InitSpec::Kind::kValues:
            v = e.init.values.at(c);
            break;
        }
        flat[e.offset + r * e.cols + c] = v;
      }
  }
  return flat;
}

std::map<std::string, Eigen::MatrixXd> ParamRegistry::unpack(const Eigen::VectorXd& flat) const {
  if (flat.size() != size_)
    throw ValidationError("parameter vector has " + std::to_string(flat.size()) +
                          " entries, expected " + std::to_string(size_));
  std::map<std::string, Eigen::MatrixXd> out;
  for (const auto& e : entries_) {
    Eigen::MatrixXd m(e.rows, e.cols);
    for (int r = 0; r < e.rows; ++r)
      for (int c = 0; c < e.cols; ++c) m(r, c) = flat[e.offset + r * e.cols + c];
    out.emplace(e.name, std::move(m));
  }
  return out;
}

Eigen::VectorXd ParamRegistry::pack(const std::map<std::string, Eigen::MatrixXd>& tensors) const {
  Eigen::VectorXd flat(size_);
  for (const auto& e : entries_) {
    const auto it = tensors.find(e.name);
    if (it == tensors.end()) throw ValidationError("missing parameter '" + e.name + "'");
    if (it->second.rows() != e.rows || it->second.cols() != e.cols)
      throw ValidationError("parameter '" + e.name + "' has the wrong shape");
    for (int r = 0; r < e.rows; ++r)
      for (int c = 0; c < e.cols; ++c) flat[e.offset + r * e.cols + c] = it->second(r, c);
  }
  return flat;
}

std::vector<std::string> ParamRegistry::describe() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    out.push_back(e.name + " " + std::to_string(e.offset) + " " + std::to_string(e.rows) + "x" +
                  std::to_string(e.cols));
  return out;
}

Eigen::VectorXd param_gradient(const std::function<Var(std::span<const Var>)>& loss,
                               const Eigen::VectorXd& params, const ParamRegistry& registry) {
  Tape tape;
  TapeScope scope(tape);
  std::vector<Var> leaves(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) leaves[i] = Var::leaf(params[i]);
  const Var out = loss(leaves);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  if (out.id >= 0) {
    std::vector<double> adjoint(tape.size(), 0.0);
    adjoint[out.id] = 1.0;
    tape.backward(adjoint);
    for (Eigen::Index i = 0; i < params.size(); ++i) grad[i] = adjoint[leaves[i].id];
  }
  for (const auto& e : registry.entries()) {
    if (e.frozen) {
      grad.segment(e.offset, e.size()).setZero();
      continue;
    }
    if (!grad.segment(e.offset, e.size()).allFinite())
      throw NumericalError("non-finite gradient for parameter '" + e.name + "'");
  }
  return grad;
}

}  // namespace moonlet::ad
