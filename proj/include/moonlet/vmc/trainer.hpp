// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "moonlet/canon/canonicalize.hpp"
#include "moonlet/chem/hf_solution.hpp"
#include "moonlet/vmc/optimizer.hpp"
#include "moonlet/vmc/sampler.hpp"
#include "moonlet/wf/ansatz.hpp"

namespace moonlet::vmc {

struct TrainConfig {
  int steps = 2000;
  int walkers = 4096;  ///< total, split evenly across molecules
  int mcmc_steps = 40;
  int burn_in = 500;  ///< MH sub-steps before the first step
  double target_pmove = 0.5;
  double width_kappa = 0.1;
  double initial_width = 0.5;
  double clip_multiplier = 5.0;
  double damping = 1e-4;  ///< multiplied by the energy standard deviation
  int cg_steps = 100;
  double lr = 0.1;
  double lr_decay = 100.0;
  double max_norm = 1.0;
  int pretrain_steps = 10000;
  double pretrain_lr = 1e-3;
  int pretrain_mcmc_steps = 5;
  double regularizer_weight = 1e-3;
  int checkpoint_every = 0;  ///< 0 disables periodic checkpoints
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

/// One training molecule with its optional reference orbitals for pretraining.
struct MoleculeInput {
  std::string name;
  chem::Molecule molecule;
  std::optional<chem::HFSolution> hf;
};

/// One row of the training trace.
struct TraceRow {
  int step = 0;
  std::string molecule;
  double energy = 0.0;
  double std = 0.0;
  double pmove = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

void write_trace_header(std::ostream& out);
void write_trace_row(std::ostream& out, const TraceRow& row);

struct PretrainRow {
  int step = 0;
  double loss = 0.0;
  double matching = 0.0;
  double regularizer = 0.0;
};

class Trainer {
 public:
  Trainer(const wf::NetworkConfig& network, const TrainConfig& config,
          std::vector<MoleculeInput> molecules);

  const wf::Ansatz& ansatz() const { return ansatz_; }
  const TrainConfig& config() const { return config_; }
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& params);
  int step_count() const { return step_; }
  int n_molecules() const { return static_cast<int>(molecules_.size()); }
  const std::string& name(int i) const { return molecules_[i].name; }
  const wf::System& system(int i) const { return molecules_[i].system; }
  const WalkerSet& walkers(int i) const { return molecules_[i].walkers; }
  bool burned_in() const { return burned_in_; }

  /// Runs the configured number of MH sub-steps on every molecule.
  void burn_in();

  /// One variational step; returns one trace row per molecule. Throws
  /// NumericalError after three consecutive steps with non-finite energies.
  std::vector<TraceRow> step();

  /// One orbital-matching step. Throws ConfigError if a molecule has no reference orbitals.
  PretrainRow pretrain_step();

  /// Writes `<prefix>.json`, `<prefix>.params.bin` and `<prefix>.walkers.bin`.
  void save_checkpoint(const std::filesystem::path& prefix) const;
  /// Restores parameters, walkers, widths and RNG counters. Throws ConfigError
  /// when the checkpoint was written for a different network or molecule set.
  void load_checkpoint(const std::filesystem::path& prefix);

  /// Hash of the network configuration and the molecule set.
  std::string config_hash() const;

 private:
  struct Entry {
    std::string name;
    wf::System system;
    WalkerSet walkers;
    std::optional<chem::HFSolution> hf;
    std::optional<canon::CanonicalizedHF> canon;
  };

  void ensure_burned_in();

  TrainConfig config_;
  wf::Ansatz ansatz_;
  Eigen::VectorXd params_;
  std::vector<Entry> molecules_;
  std::optional<Lamb> lamb_;
  int step_ = 0;
  int pretrain_step_ = 0;
  int nan_streak_ = 0;
  bool burned_in_ = false;
};

struct EvaluateOptions {
  int walkers = 1024;
  int iterations = 100;  ///< measurement iterations after burn-in
  int mcmc_steps = 40;
  int burn_in = 500;
  double initial_width = 0.5;
  std::uint64_t seed = 0;
};

struct Evaluation {
  double energy = 0.0;
  double stderr_ = 0.0;  ///< from the spread of per-iteration means
  double std = 0.0;      ///< of the individual local energies
  long samples = 0;
  double pmove = 0.0;
  std::vector<double> iteration_means;
};

/// Fixed-parameter sampling estimate of the energy (no clipping).
Evaluation evaluate(const wf::Ansatz& ansatz, const Eigen::VectorXd& params,
                    const wf::System& system, const EvaluateOptions& options);

/// Parameters stored by save_checkpoint.
Eigen::VectorXd load_params(const std::filesystem::path& path, int expected_size);
void save_params(const std::filesystem::path& path, const Eigen::VectorXd& params);

}  // namespace moonlet::vmc
