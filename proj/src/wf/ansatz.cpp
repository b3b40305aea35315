// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/wf/ansatz.hpp"

#include <algorithm>
#include <string>

#include "moonlet/ad/lap.hpp"
#include "moonlet/errors.hpp"

namespace moonlet::wf {

using ad::Var;

std::vector<double> to_local(const System& system, std::span<const double> electrons) {
  std::vector<double> out(electrons.size());
  for (std::size_t i = 0; i + 2 < electrons.size(); i += 3) {
    const Vec3 p = system.frame.to_local(Vec3(electrons[i], electrons[i + 1], electrons[i + 2]));
    out[i] = p.x();
    out[i + 1] = p.y();
    out[i + 2] = p.z();
  }
  return out;
}

Ansatz::Ansatz(const NetworkConfig& config)
    : config_(config), layout_(std::make_unique<ReparamLayout>(config.moon)) {
  globe_ = std::make_unique<Globe>(config.globe, *layout_, registry_);
  moon_begin_ = registry_.size();
  moon_ = std::make_unique<Moon>(config.moon, *layout_, registry_);
}

std::vector<double> Ansatz::reparametrize(const Eigen::VectorXd& params,
                                          const System& system) const {
  return globe_->forward<double, double>(params.data(), system);
}

Amplitude Ansatz::log_psi(const Eigen::VectorXd& params, std::span<const double> reparam,
                          const System& system, std::span<const double> electrons) const {
  const std::vector<double> x = to_local(system, electrons);
  const auto out = moon_->log_psi<double, double>(params.data(), reparam.data(), system,
                                                  std::span<const double>(x));
  return {out.sign, out.log_abs};
}

template <int K>
LocalDerivatives Ansatz::derivatives_impl(const Eigen::VectorXd& params,
                                          std::span<const double> reparam, const System& system,
                                          std::span<const double> electrons) const {
  using L = ad::Lap<K>;
  const int n = system.n_electrons();
  const std::vector<double> local = to_local(system, electrons);
  const auto& rot = system.frame.rotation;
  std::vector<L> x(3 * n);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      L v(local[3 * i + c]);
      for (int d = 0; d < 3; ++d) v.g[3 * i + d] = rot(d, c);
      x[3 * i + c] = v;
    }
  const auto amp =
      moon_->log_psi<L, double>(params.data(), reparam.data(), system, std::span<const L>(x));
  LocalDerivatives out;
  out.sign = amp.sign;
  out.log_abs = amp.log_abs.v;
  out.laplacian = amp.log_abs.l;
  out.gradient.resize(3 * n);
  for (int k = 0; k < 3 * n; ++k) out.gradient[k] = amp.log_abs.g[k];
  return out;
}

LocalDerivatives Ansatz::derivatives(const Eigen::VectorXd& params,
                                     std::span<const double> reparam, const System& system,
                                     std::span<const double> electrons) const {
  const int n = system.n_electrons();
  if (n <= 1) return derivatives_impl<3>(params, reparam, system, electrons);
  if (n <= 2) return derivatives_impl<6>(params, reparam, system, electrons);
  if (n <= 4) return derivatives_impl<12>(params, reparam, system, electrons);
  if (n <= 8) return derivatives_impl<24>(params, reparam, system, electrons);
  if (n <= kMaxElectrons) return derivatives_impl<48>(params, reparam, system, electrons);
  throw ConfigError("Laplacians support at most " + std::to_string(kMaxElectrons) +
                    " electrons, got " + std::to_string(n));
}

GlobeRecord Ansatz::record_globe(const Eigen::VectorXd& params, const System& system,
                                 bool with_regularizer) const {
  GlobeRecord rec;
  ad::TapeScope scope(rec.tape);
  std::vector<Var> p(moon_begin_);
  rec.leaf_ids.resize(moon_begin_);
  for (int i = 0; i < moon_begin_; ++i) {
    p[i] = Var::leaf(params[i]);
    rec.leaf_ids[i] = p[i].id;
  }
  const std::vector<Var> out = globe_->forward<Var, Var>(p.data(), system);
  rec.outputs.resize(out.size());
  rec.output_ids.resize(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    rec.outputs[k] = out[k].v;
    rec.output_ids[k] = out[k].id;
  }
  if (with_regularizer) {
    const Var reg = moment_regularizer<Var>(std::span<const Var>(out), *layout_, system.n_atoms(),
                                            system.n_orbitals());
    rec.regularizer = reg.v;
    rec.regularizer_id = reg.id;
  }
  return rec;
}

void Ansatz::globe_vjp(const GlobeRecord& globe, std::span<const double> output_adjoint,
                       double regularizer_adjoint, std::span<double> row) const {
  thread_local std::vector<double> adj;
  adj.assign(globe.tape.size(), 0.0);
  for (std::size_t k = 0; k < output_adjoint.size(); ++k)
    if (globe.output_ids[k] >= 0) adj[globe.output_ids[k]] += output_adjoint[k];
  if (globe.regularizer_id >= 0) adj[globe.regularizer_id] += regularizer_adjoint;
  globe.tape.backward(adj);
  for (int i = 0; i < moon_begin_; ++i) row[i] = adj[globe.leaf_ids[i]];
}

namespace {

// Moon parameters and emitted parameters as tape leaves; Globe entries stay constant.
struct MoonLeaves {
  std::vector<Var> params;
  std::vector<Var> reparam;
};

void make_leaves(MoonLeaves& leaves, const Eigen::VectorXd& params, int moon_begin,
                 std::span<const double> reparam) {
  leaves.params.resize(params.size());
  for (int i = moon_begin; i < params.size(); ++i) leaves.params[i] = Var::leaf(params[i]);
  leaves.reparam.resize(reparam.size());
  for (std::size_t k = 0; k < reparam.size(); ++k) leaves.reparam[k] = Var::leaf(reparam[k]);
}

std::vector<Var> constants(std::span<const double> x) { return {x.begin(), x.end()}; }

}  // namespace

void Ansatz::moon_gradient(const Eigen::VectorXd& params, const GlobeRecord& globe,
                           const System& system, std::span<const double> electrons,
                           std::span<double> row, std::span<double> u) const {
  thread_local ad::Tape tape;
  thread_local MoonLeaves leaves;
  thread_local std::vector<double> adj;
  tape.clear();
  ad::TapeScope scope(tape);
  make_leaves(leaves, params, moon_begin_, globe.outputs);
  const std::vector<Var> x = constants(to_local(system, electrons));
  const auto amp = moon_->log_psi<Var, Var>(leaves.params.data(), leaves.reparam.data(), system,
                                            std::span<const Var>(x));
  if (amp.sign == 0.0) throw NumericalError("log|psi| gradient requested where psi vanishes");
  adj.assign(tape.size(), 0.0);
  if (amp.log_abs.id >= 0) {
    adj[amp.log_abs.id] = 1.0;
    tape.backward(adj);
  }
  for (int i = moon_begin_; i < params.size(); ++i) row[i] = adj[leaves.params[i].id];
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = adj[leaves.reparam[k].id];
}

void Ansatz::log_psi_gradient(const Eigen::VectorXd& params, const GlobeRecord& globe,
                              const System& system, std::span<const double> electrons,
                              std::span<double> row) const {
  std::vector<double> u(globe.outputs.size());
  moon_gradient(params, globe, system, electrons, row, u);
  globe_vjp(globe, u, 0.0, row);
}

void Ansatz::log_psi_gradients(const Eigen::VectorXd& params, const GlobeRecord& globe,
                               const System& system, std::span<const double> electrons,
                               Eigen::Ref<Eigen::MatrixXd> rows) const {
  constexpr int kWidth = 32;
  const int dim = 3 * system.n_electrons();
  const int count = static_cast<int>(electrons.size()) / dim;
  const int n_out = static_cast<int>(globe.outputs.size());
  const int chunks = (count + kWidth - 1) / kWidth;
  std::vector<double> row(params.size()), u(n_out), adj;
  for (int c = 0; c < chunks; ++c) {
    const int first = c * kWidth;
    const int width = std::min(kWidth, count - first);
    adj.assign(static_cast<std::size_t>(globe.tape.size()) * width, 0.0);
    for (int k = 0; k < width; ++k) {
      moon_gradient(params, globe, system, electrons.subspan((first + k) * dim, dim), row, u);
      for (int i = moon_begin_; i < params.size(); ++i) rows(first + k, i) = row[i];
      for (int o = 0; o < n_out; ++o)
        if (globe.output_ids[o] >= 0)
          adj[static_cast<std::size_t>(globe.output_ids[o]) * width + k] += u[o];
    }
    globe.tape.backward_batch(adj, width);
    for (int i = 0; i < moon_begin_; ++i) {
      const double* a = adj.data() + static_cast<std::size_t>(globe.leaf_ids[i]) * width;
      for (int k = 0; k < width; ++k) rows(first + k, i) = a[k];
    }
  }
}

Eigen::VectorXd Ansatz::log_psi_gradient_reference(const Eigen::VectorXd& params,
                                                   const System& system,
                                                   std::span<const double> electrons) const {
  const std::vector<double> local = to_local(system, electrons);
  return ad::param_gradient(
      [&](std::span<const Var> p) {
        const std::vector<Var> r = globe_->forward<Var, Var>(p.data(), system);
        const std::vector<Var> x = constants(local);
        return moon_->log_psi<Var, Var>(p.data(), r.data(), system, std::span<const Var>(x))
            .log_abs;
      },
      params, registry_);
}

std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> Ansatz::orbital_matrices(
    const Eigen::VectorXd& params, std::span<const double> reparam, const System& system,
    std::span<const double> electrons) const {
  const std::vector<double> x = to_local(system, electrons);
  const auto blocks = moon_->orbitals<double, double>(params.data(), reparam.data(), system,
                                                      std::span<const double>(x));
  const int n_up = system.layout.n_up;
  const int n_down = system.layout.n_down;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> out;
  for (const auto& b : blocks) {
    Eigen::MatrixXd up(n_up, n_up), down(n_down, n_down);
    for (int i = 0; i < n_up; ++i)
      for (int j = 0; j < n_up; ++j) up(i, j) = b.up[i * n_up + j];
    for (int i = 0; i < n_down; ++i)
      for (int j = 0; j < n_down; ++j) down(i, j) = b.down[i * n_down + j];
    out.emplace_back(std::move(up), std::move(down));
  }
  return out;
}

Ansatz::PretrainResult Ansatz::pretrain_gradient(const Eigen::VectorXd& params,
                                                 const System& system,
                                                 std::span<const std::vector<double>> walkers,
                                                 std::span<const Eigen::MatrixXd> targets,
                                                 double reg_weight) const {
  if (walkers.size() != targets.size() || walkers.empty())
    throw ConfigError("pretraining needs one target matrix per walker");
  const GlobeRecord globe = record_globe(params, system, reg_weight != 0.0);
  const int n_up = system.layout.n_up;
  const int n_down = system.layout.n_down;
  const double norm = 1.0 / (static_cast<double>(walkers.size()) * config_.moon.determinants);

  PretrainResult result;
  result.gradient = Eigen::VectorXd::Zero(params.size());
  std::vector<double> u(globe.outputs.size(), 0.0);
  ad::Tape tape;
  MoonLeaves leaves;
  std::vector<double> adj;
  for (std::size_t w = 0; w < walkers.size(); ++w) {
    const Eigen::MatrixXd& target = targets[w];
    if (target.rows() != system.n_electrons() || target.cols() < n_up)
      throw ConfigError("pretraining target has the wrong shape");
    tape.clear();
    ad::TapeScope scope(tape);
    make_leaves(leaves, params, moon_begin_, globe.outputs);
    const std::vector<Var> x = constants(to_local(system, walkers[w]));
    const auto blocks = moon_->orbitals<Var, Var>(leaves.params.data(), leaves.reparam.data(),
                                                  system, std::span<const Var>(x));
    Var loss(0.0);
    for (const auto& b : blocks) {
      for (int i = 0; i < n_up; ++i)
        for (int j = 0; j < n_up; ++j) {
          const Var diff = b.up[i * n_up + j] - target(j, i);
          loss += diff * diff;
        }
      for (int i = 0; i < n_down; ++i)
        for (int j = 0; j < n_down; ++j) {
          const Var diff = b.down[i * n_down + j] - target(n_up + j, i);
          loss += diff * diff;
        }
    }
    result.matching += loss.v * norm;
    if (loss.id < 0) continue;
    adj.assign(tape.size(), 0.0);
    adj[loss.id] = norm;
    tape.backward(adj);
    for (int i = moon_begin_; i < params.size(); ++i) result.gradient[i] += adj[leaves.params[i].id];
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += adj[leaves.reparam[k].id];
  }
  globe_vjp(globe, u, reg_weight, std::span<double>(result.gradient.data(), moon_begin_));
  result.regularizer = globe.regularizer;
  result.loss = result.matching + reg_weight * globe.regularizer;
  const Eigen::VectorXd mask = registry_.trainable_mask();
  result.gradient = result.gradient.cwiseProduct(mask);
  return result;
}

}  // namespace moonlet::wf
