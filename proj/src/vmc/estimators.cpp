// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/vmc/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "moonlet/errors.hpp"

namespace moonlet::vmc {

double median(std::vector<double> values) {
  if (values.empty()) throw NumericalError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<double> clip_energies(std::span<const double> energies, double multiplier) {
  std::vector<double> finite;
  for (double e : energies)
    if (std::isfinite(e)) finite.push_back(e);
  if (finite.empty()) throw NumericalError("no finite local energy to clip");
  // Sorting first makes the band independent of the input order, bit for bit.
  std::sort(finite.begin(), finite.end());
  const double m = median(finite);
  double d = 0.0;
  for (double e : finite) d += std::abs(e - m);
  d /= static_cast<double>(finite.size());
  const double lo = m - multiplier * d, hi = m + multiplier * d;
  std::vector<double> out(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i)
    out[i] = std::isfinite(energies[i]) ? std::clamp(energies[i], lo, hi) : m;
  return out;
}

EnergyStats energy_stats(std::span<const double> energies) {
  EnergyStats s;
  s.count = static_cast<int>(energies.size());
  if (s.count == 0) return s;
  for (double e : energies) s.mean += e;
  s.mean /= s.count;
  double var = 0.0;
  for (double e : energies) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / s.count);
  s.stderr_ = s.std / std::sqrt(static_cast<double>(s.count));
  return s;
}

Eigen::VectorXd energy_gradient(const Eigen::MatrixXd& jacobian, std::span<const double> energies) {
  const int n = static_cast<int>(energies.size());
  if (jacobian.rows() != n) throw ConfigError("Jacobian rows do not match the energy count");
  const Eigen::Map<const Eigen::VectorXd> e(energies.data(), n);
  const Eigen::VectorXd centered = e.array() - e.mean();
  return jacobian.transpose() * centered / n;
}

double rescale_factor(double s) { return s > 1.0 ? 1.0 / s : 1.0; }

Eigen::VectorXd rescale_gradients(std::span<const Eigen::VectorXd> gradients,
                                  std::span<const double> stds) {
  if (gradients.empty() || gradients.size() != stds.size())
    throw ConfigError("one standard deviation per gradient is required");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(gradients[0].size());
  for (std::size_t i = 0; i < gradients.size(); ++i) out += rescale_factor(stds[i]) * gradients[i];
  return out / static_cast<double>(gradients.size());
}

double learning_rate(int step, double base, double decay) { return base / (1.0 + step / decay); }

Eigen::VectorXd clip_norm(const Eigen::VectorXd& x, double max_norm) {
  const double n = x.norm();
  return n > max_norm ? Eigen::VectorXd(x * (max_norm / n)) : x;
}

}  // namespace moonlet::vmc
