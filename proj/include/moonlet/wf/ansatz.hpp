// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "moonlet/ad/params.hpp"
#include "moonlet/ad/tape.hpp"
#include "moonlet/wf/config.hpp"
#include "moonlet/wf/globe.hpp"
#include "moonlet/wf/moon.hpp"
#include "moonlet/wf/reparam.hpp"
#include "moonlet/wf/system.hpp"

namespace moonlet::wf {

struct Amplitude {
  double sign = 0.0;
  double log_abs = 0.0;
};

/// log|psi| with its gradient and Laplacian in global electron coordinates.
struct LocalDerivatives {
  double sign = 0.0;
  double log_abs = 0.0;
  double laplacian = 0.0;
  Eigen::VectorXd gradient;
};

/// Globe outputs for one molecule recorded on a tape, for reverse passes that
/// reach the shared parameters through the emitted Moon parameters.
struct GlobeRecord {
  ad::Tape tape;
  std::vector<int> leaf_ids;    ///< tape id of each Globe parameter, registry order
  std::vector<int> output_ids;  ///< tape id of each emitted parameter, -1 if constant
  std::vector<double> outputs;
  int regularizer_id = -1;
  double regularizer = 0.0;
};

/// Largest supported electron count for Laplacians.
inline constexpr int kMaxElectrons = 16;

/// Globe and Moon sharing one flat parameter vector (Globe entries first).
class Ansatz {
 public:
  explicit Ansatz(const NetworkConfig& config);
  Ansatz(const Ansatz&) = delete;
  Ansatz& operator=(const Ansatz&) = delete;

  const NetworkConfig& config() const { return config_; }
  const ad::ParamRegistry& registry() const { return registry_; }
  ad::ParamRegistry& registry() { return registry_; }
  const ReparamLayout& layout() const { return *layout_; }
  const Globe& globe() const { return *globe_; }
  const Moon& moon() const { return *moon_; }
  int n_params() const { return registry_.size(); }
  int moon_begin() const { return moon_begin_; }

  Eigen::VectorXd initialize(std::uint64_t seed) const { return registry_.initialize(seed); }

  /// Moon parameters emitted by Globe for `system`.
  std::vector<double> reparametrize(const Eigen::VectorXd& params, const System& system) const;

  Amplitude log_psi(const Eigen::VectorXd& params, std::span<const double> reparam,
                    const System& system, std::span<const double> electrons) const;

  LocalDerivatives derivatives(const Eigen::VectorXd& params, std::span<const double> reparam,
                               const System& system, std::span<const double> electrons) const;

  GlobeRecord record_globe(const Eigen::VectorXd& params, const System& system,
                           bool with_regularizer = false) const;

  /// d log|psi| / d params for one configuration, written to `row` (n_params entries).
  void log_psi_gradient(const Eigen::VectorXd& params, const GlobeRecord& globe,
                        const System& system, std::span<const double> electrons,
                        std::span<double> row) const;

  /// log_psi_gradient for many configurations (`electrons` holds them back to
  /// back); row w of `rows` receives configuration w.
  void log_psi_gradients(const Eigen::VectorXd& params, const GlobeRecord& globe,
                         const System& system, std::span<const double> electrons,
                         Eigen::Ref<Eigen::MatrixXd> rows) const;

  /// Same quantity through a single tape over both networks; slow, used as a reference.
  Eigen::VectorXd log_psi_gradient_reference(const Eigen::VectorXd& params, const System& system,
                                             std::span<const double> electrons) const;

  /// Orbital blocks per determinant as Eigen matrices (orbitals x electrons).
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> orbital_matrices(
      const Eigen::VectorXd& params, std::span<const double> reparam, const System& system,
      std::span<const double> electrons) const;

  struct PretrainResult {
    double loss = 0.0;
    double matching = 0.0;
    double regularizer = 0.0;
    Eigen::VectorXd gradient;
  };
  /// Mean over walkers and determinants of the squared Frobenius distance between
  /// the orbital blocks and `targets` (one n_electrons x n_orbitals matrix of
  /// reference orbital values per walker), plus `reg_weight` times the moment
  /// regularizer of the emitted parameters.
  PretrainResult pretrain_gradient(const Eigen::VectorXd& params, const System& system,
                                   std::span<const std::vector<double>> walkers,
                                   std::span<const Eigen::MatrixXd> targets,
                                   double reg_weight) const;

 private:
  template <int K>
  LocalDerivatives derivatives_impl(const Eigen::VectorXd& params, std::span<const double> reparam,
                                    const System& system, std::span<const double> electrons) const;

  // Moon part of the gradient into row[moon_begin, n_params); emitted-parameter adjoints into u.
  void moon_gradient(const Eigen::VectorXd& params, const GlobeRecord& globe, const System& system,
                     std::span<const double> electrons, std::span<double> row,
                     std::span<double> u) const;

  void globe_vjp(const GlobeRecord& globe, std::span<const double> output_adjoint,
                 double regularizer_adjoint, std::span<double> row) const;

  NetworkConfig config_;
  ad::ParamRegistry registry_;
  std::unique_ptr<ReparamLayout> layout_;
  std::unique_ptr<Globe> globe_;
  std::unique_ptr<Moon> moon_;
  int moon_begin_ = 0;
};

/// Electron coordinates converted to the molecule's local frame.
std::vector<double> to_local(const System& system, std::span<const double> electrons);

}  // namespace moonlet::wf
