// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moonlet/ad/tape.hpp"

namespace moonlet::ad {

struct InitSpec {
  enum class Kind { kConstant, kNormal, kLogSpaced, kSoftplusLogSpaced, kValues };
  Kind kind = Kind::kConstant;
  double a = 0.0;  ///< constant value, normal mean, or first log-spaced value
  double b = 0.0;  ///< normal standard deviation, or last log-spaced value
  std::vector<double> values;  ///< per-column values, repeated over rows

  static InitSpec constant(double value) { return {Kind::kConstant, value, 0.0, {}}; }
  static InitSpec normal(double stddev, double mean = 0.0) {
    return {Kind::kNormal, mean, stddev, {}};
  }
  /// Values log-spaced from `lo` to `hi` along the columns, repeated over rows.
  static InitSpec log_spaced(double lo, double hi) { return {Kind::kLogSpaced, lo, hi, {}}; }
  /// Like log_spaced but stores softplus^-1 of each value.
  static InitSpec softplus_log_spaced(double lo, double hi) {
    return {Kind::kSoftplusLogSpaced, lo, hi, {}};
  }
  static InitSpec per_column(std::vector<double> values) {
    return {Kind::kValues, 0.0, 0.0, std::move(values)};
  }
};

/// A named row-major tensor inside the flat parameter vector.
struct ParamEntry {
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 0;
  InitSpec init;
  bool frozen = false;

  int size() const { return rows * cols; }
};

/// Maps named parameter tensors to slices of one flat vector. The layout is
/// fixed once registration is done.
class ParamRegistry {
 public:
  /// Returns the entry offset. Throws ConfigError on duplicate names or empty shapes.
  int add(const std::string& name, int rows, int cols, InitSpec init);

  int size() const { return size_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry& entry(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  /// Freezes every entry whose name starts with `prefix`; returns how many matched.
  int freeze(const std::string& prefix);
  /// 1 for trainable coordinates, 0 for frozen ones.
  Eigen::VectorXd trainable_mask() const;

  /// Deterministic initialization; each entry's stream depends on (seed, name) only.
  Eigen::VectorXd initialize(std::uint64_t seed) const;

  std::map<std::string, Eigen::MatrixXd> unpack(const Eigen::VectorXd& flat) const;
  Eigen::VectorXd pack(const std::map<std::string, Eigen::MatrixXd>& tensors) const;

  /// Human-readable layout description used in checkpoints.
  std::vector<std::string> describe() const;

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, int> index_;
  int size_ = 0;
};

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 1469598103934665603ull);

/// Gradient of a scalar function of the parameters via one reverse sweep.
/// Frozen coordinates get zero gradient. Throws NumericalError naming the first
/// parameter with a non-finite gradient.
Eigen::VectorXd param_gradient(const std::function<Var(std::span<const Var>)>& loss,
                               const Eigen::VectorXd& params, const ParamRegistry& registry);

}  // namespace moonlet::ad
