// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace moonlet::vmc {

double median(std::vector<double> values);

/// Clips every entry to [m - c d, m + c d] where m is the median and d the mean
/// absolute deviation from it. Non-finite entries are replaced by m.
/// Throws NumericalError without any finite entry.
std::vector<double> clip_energies(std::span<const double> energies, double multiplier = 5.0);

struct EnergyStats {
  double mean = 0.0;
  double std = 0.0;
  double stderr_ = 0.0;  ///< std / sqrt(n), ignoring autocorrelation
  int count = 0;
};

EnergyStats energy_stats(std::span<const double> energies);

/// mean_w (E_w - mean E) * J_w for Jacobian rows J_w = d log|psi_w| / d theta.
Eigen::VectorXd energy_gradient(const Eigen::MatrixXd& jacobian, std::span<const double> energies);

/// min(1, 1 / s); s = 0 gives 1.
double rescale_factor(double s);

/// Mean over molecules of rescale_factor(s_i) * grad_i.
Eigen::VectorXd rescale_gradients(std::span<const Eigen::VectorXd> gradients,
                                  std::span<const double> stds);

/// base / (1 + t / decay).
double learning_rate(int step, double base = 0.1, double decay = 100.0);

/// Scales x down to norm max_norm if it is longer.
Eigen::VectorXd clip_norm(const Eigen::VectorXd& x, double max_norm = 1.0);

}  // namespace moonlet::vmc
