// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/vmc/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "moonlet/errors.hpp"
#include "moonlet/vmc/estimators.hpp"
#include "moonlet/vmc/hamiltonian.hpp"
#include "moonlet/vmc/parallel.hpp"

namespace moonlet::vmc {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ConfigError("train config: " + field + " must be " + rule);
}

// MH sub-steps in chunks of at most `chunk`, adapting the width after each chunk.
void run_substeps(WalkerSet& walkers, const LogAmplitudeFn& fn, int total, int chunk,
                  const TrainConfig& c) {
  for (int done = 0; done < total;) {
    MHOptions o;
    o.substeps = std::min(chunk, total - done);
    o.target = c.target_pmove;
    o.kappa = c.width_kappa;
    mh_iteration(walkers, fn, o);
    done += o.substeps;
  }
}

std::vector<double> local_energies(const wf::Ansatz& ansatz, const Eigen::VectorXd& params,
                                   std::span<const double> reparam, const wf::System& system,
                                   const WalkerSet& walkers) {
  std::vector<double> e(walkers.size());
  parallel_for(walkers.size(), [&](int w) {
    try {
      e[w] = local_energy(ansatz, params, reparam, system, walkers.walker(w));
    } catch (const NumericalError&) {
      e[w] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return e;
}

// Moves every walker with a non-finite local energy onto the next walker with a
// finite one. Returns false if no walker has a finite energy.
bool resample_nonfinite(WalkerSet& walkers, std::vector<double>& energies) {
  const int n = walkers.size();
  int first_finite = -1;
  for (int w = 0; w < n; ++w)
    if (std::isfinite(energies[w])) {
      first_finite = w;
      break;
    }
  if (first_finite < 0) return false;
  for (int w = 0; w < n; ++w) {
    if (std::isfinite(energies[w])) continue;
    int src = (w + 1) % n;
    while (!std::isfinite(energies[src])) src = (src + 1) % n;
    std::copy(walkers.walker(src).begin(), walkers.walker(src).end(), walkers.walker(w).begin());
    walkers.log_abs[w] = walkers.log_abs[src];
    energies[w] = energies[src];
  }
  return true;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void write_doubles(const std::filesystem::path& path, const double* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(data[k]);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<double> out;
  unsigned char bytes[8];
  while (in.read(reinterpret_cast<char*>(bytes), 8)) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    out.push_back(std::bit_cast<double>(bits));
  }
  if (in.gcount() != 0) throw ParseError(path.string() + ": size is not a multiple of 8 bytes");
  return out;
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
  return prefix.string() + suffix;
}

std::vector<chem::Vec3> as_points(std::span<const double> x) {
  std::vector<chem::Vec3> p(x.size() / 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = chem::Vec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  require(steps >= 0, "steps", "non-negative");
  require(walkers > 0, "walkers", "positive");
  require(mcmc_steps > 0, "mcmc_steps", "positive");
  require(burn_in >= 0, "burn_in", "non-negative");
  require(target_pmove > 0 && target_pmove < 1, "target_pmove", "in (0, 1)");
  require(width_kappa > 0, "width_kappa", "positive");
  require(initial_width > 0, "initial_width", "positive");
  require(clip_multiplier > 0, "clip_multiplier", "positive");
  require(damping > 0, "damping", "positive");
  require(cg_steps > 0, "cg_steps", "positive");
  require(lr > 0, "lr", "positive");
  require(lr_decay > 0, "lr_decay", "positive");
  require(max_norm > 0, "max_norm", "positive");
  require(pretrain_steps >= 0, "pretrain_steps", "non-negative");
  require(pretrain_lr > 0, "pretrain_lr", "positive");
  require(pretrain_mcmc_steps > 0, "pretrain_mcmc_steps", "positive");
  require(regularizer_weight >= 0, "regularizer_weight", "non-negative");
  require(checkpoint_every >= 0, "checkpoint_every", "non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"steps", c.steps},
          {"walkers", c.walkers},
          {"mcmc_steps", c.mcmc_steps},
          {"burn_in", c.burn_in},
          {"target_pmove", c.target_pmove},
          {"width_kappa", c.width_kappa},
          {"initial_width", c.initial_width},
          {"clip_multiplier", c.clip_multiplier},
          {"damping", c.damping},
          {"cg_steps", c.cg_steps},
          {"lr", c.lr},
          {"lr_decay", c.lr_decay},
          {"max_norm", c.max_norm},
          {"pretrain_steps", c.pretrain_steps},
          {"pretrain_lr", c.pretrain_lr},
          {"pretrain_mcmc_steps", c.pretrain_mcmc_steps},
          {"regularizer_weight", c.regularizer_weight},
          {"checkpoint_every", c.checkpoint_every},
          {"seed", c.seed}};
}

void write_trace_header(std::ostream& out) {
  out << "step,molecule,energy,std,pmove,grad_norm,lr\n";
}

void write_trace_row(std::ostream& out, const TraceRow& r) {
  out << r.step << ',' << r.molecule << ',' << format_double(r.energy) << ','
      << format_double(r.std) << ',' << format_double(r.pmove) << ','
      << format_double(r.grad_norm) << ',' << format_double(r.lr) << '\n';
}

Trainer::Trainer(const wf::NetworkConfig& network, const TrainConfig& config,
                 std::vector<MoleculeInput> molecules)
    : config_(config), ansatz_(network) {
  config_.validate();
  if (molecules.empty()) throw ConfigError("training needs at least one molecule");
  if (config_.walkers % static_cast<int>(molecules.size()) != 0)
    throw ConfigError("walkers (" + std::to_string(config_.walkers) +
                      ") must divide evenly across " + std::to_string(molecules.size()) +
                      " molecules");
  const int per_molecule = config_.walkers / static_cast<int>(molecules.size());
  params_ = ansatz_.initialize(config_.seed);
  for (std::size_t i = 0; i < molecules.size(); ++i) {
    MoleculeInput& in = molecules[i];
    wf::System system = wf::System::build(in.molecule);
    if (system.n_electrons() > wf::kMaxElectrons)
      throw ConfigError(in.name + ": at most " + std::to_string(wf::kMaxElectrons) +
                        " electrons are supported");
    WalkerSet walkers = init_walkers(system, per_molecule, stream_seed(config_.seed, 1, i),
                                     config_.initial_width);
    Entry e{in.name, std::move(system), std::move(walkers), std::move(in.hf), std::nullopt};
    if (e.hf) {
      const auto& a = e.hf->molecule;
      const auto& b = e.system.molecule;
      bool same = a.size() == b.size();
      for (int m = 0; same && m < a.size(); ++m)
        same = a.charge(m) == b.charge(m) && (a.position(m) - b.position(m)).norm() < 1e-6;
      if (!same) throw ConfigError(in.name + ": reference orbitals belong to a different geometry");
      e.canon = canon::canonicalize(*e.hf, canon::build_mask(e.system.orbitals, *e.hf));
    }
    molecules_.push_back(std::move(e));
  }
}

void Trainer::set_params(const Eigen::VectorXd& params) {
  if (params.size() != ansatz_.n_params())
    throw ConfigError("expected " + std::to_string(ansatz_.n_params()) + " parameters, got " +
                      std::to_string(params.size()));
  params_ = params;
}

std::string Trainer::config_hash() const {
  std::string text;
  for (const auto& line : ansatz_.registry().describe()) text += line + "\n";
  for (const auto& e : molecules_) text += e.name + " " + chem::molecule_to_json(e.system.molecule).dump() + "\n";
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << ad::fnv1a(text);
  return s.str();
}

void Trainer::burn_in() {
  for (auto& e : molecules_) {
    const std::vector<double> reparam = ansatz_.reparametrize(params_, e.system);
    const LogAmplitudeFn fn = [&](std::span<const double> x) {
      return ansatz_.log_psi(params_, reparam, e.system, x).log_abs;
    };
    refresh_log_abs(e.walkers, fn);
    run_substeps(e.walkers, fn, config_.burn_in, config_.mcmc_steps, config_);
  }
  burned_in_ = true;
}

void Trainer::ensure_burned_in() {
  if (!burned_in_) burn_in();
}

std::vector<TraceRow> Trainer::step() {
  ensure_burned_in();
  const int n_mol = n_molecules();
  const int n_params = ansatz_.n_params();
  const double lr = learning_rate(step_, config_.lr, config_.lr_decay);
  int total = 0;
  for (const auto& e : molecules_) total += e.walkers.size();

  Eigen::MatrixXd rows(total, n_params);
  Eigen::VectorXd coefficients(total);
  std::vector<TraceRow> out(n_mol);
  std::vector<double> stds(n_mol);
  std::string failure;
  int offset = 0;
  for (int i = 0; i < n_mol; ++i) {
    Entry& e = molecules_[i];
    TraceRow& row = out[i];
    row.step = step_;
    row.molecule = e.name;
    row.lr = lr;
    const wf::GlobeRecord globe = ansatz_.record_globe(params_, e.system);
    const std::vector<double>& reparam = globe.outputs;
    const LogAmplitudeFn fn = [&](std::span<const double> x) {
      return ansatz_.log_psi(params_, reparam, e.system, x).log_abs;
    };
    refresh_log_abs(e.walkers, fn);
    MHOptions mh;
    mh.substeps = config_.mcmc_steps;
    mh.target = config_.target_pmove;
    mh.kappa = config_.width_kappa;
    row.pmove = mh_iteration(e.walkers, fn, mh);

    std::vector<double> energies = local_energies(ansatz_, params_, reparam, e.system, e.walkers);
    if (!resample_nonfinite(e.walkers, energies)) {
      row.energy = row.std = std::numeric_limits<double>::quiet_NaN();
      failure = e.name + ": every local energy is non-finite";
      break;
    }
    const std::vector<double> clipped = clip_energies(energies, config_.clip_multiplier);
    const EnergyStats stats = energy_stats(clipped);
    row.energy = stats.mean;
    row.std = stats.std;
    stds[i] = stats.std;

    const int b = e.walkers.size();
    const int dim = e.walkers.dim;
    constexpr int kChunk = 32;
    std::vector<int> bad((b + kChunk - 1) / kChunk, 0);
    parallel_for(static_cast<int>(bad.size()), [&](int c) {
      const int first = c * kChunk;
      const int width = std::min(kChunk, b - first);
      const std::span<const double> x(e.walkers.positions.data() + first * dim,
                                      static_cast<std::size_t>(width) * dim);
      try {
        ansatz_.log_psi_gradients(params_, globe, e.system, x, rows.middleRows(offset + first, width));
      } catch (const NumericalError&) {
        bad[c] = 1;
      }
    });
    auto block = rows.middleRows(offset, b);
    if (std::any_of(bad.begin(), bad.end(), [](int v) { return v != 0; }) || !block.allFinite()) {
      failure = e.name + ": non-finite log-amplitude gradient";
      break;
    }
    const double weight = std::sqrt(rescale_factor(stats.std) / (static_cast<double>(n_mol) * b));
    const Eigen::RowVectorXd mean = block.colwise().mean();
    block.rowwise() -= mean;
    block *= weight;
    for (int w = 0; w < b; ++w) coefficients[offset + w] = (clipped[w] - stats.mean) * weight;
    offset += b;
  }

  if (!failure.empty()) {
    ++nan_streak_;
    ++step_;
    if (nan_streak_ >= 3)
      throw NumericalError("training aborted after 3 consecutive non-finite steps (last: " +
                           failure + ")");
    return out;
  }
  nan_streak_ = 0;

  double mean_std = 0.0;
  for (double s : stds) mean_std += s / n_mol;
  const double damping = std::max(config_.damping * mean_std, 1e-10);
  NaturalDirection nd = natural_direction(rows, coefficients, damping, config_.cg_steps);
  const Eigen::VectorXd mask = ansatz_.registry().trainable_mask();
  Eigen::VectorXd x = nd.x.cwiseProduct(mask);
  const double norm = x.norm();
  x = clip_norm(x, config_.max_norm);
  params_ -= lr * x;
  for (auto& r : out) r.grad_norm = norm;
  ++step_;
  return out;
}

PretrainRow Trainer::pretrain_step() {
  for (const auto& e : molecules_)
    if (!e.canon) throw ConfigError(e.name + ": pretraining needs reference orbitals");
  if (!lamb_) lamb_.emplace(ansatz_.registry(), config_.pretrain_lr);
  ensure_burned_in();
  const int n_mol = n_molecules();
  PretrainRow row;
  row.step = pretrain_step_;
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(ansatz_.n_params());
  for (auto& e : molecules_) {
    const std::vector<double> reparam = ansatz_.reparametrize(params_, e.system);
    const LogAmplitudeFn fn = [&](std::span<const double> x) {
      return ansatz_.log_psi(params_, reparam, e.system, x).log_abs;
    };
    refresh_log_abs(e.walkers, fn);
    run_substeps(e.walkers, fn, config_.pretrain_mcmc_steps, config_.pretrain_mcmc_steps,
                 config_);
    const int b = e.walkers.size();
    std::vector<std::vector<double>> walkers(b);
    std::vector<Eigen::MatrixXd> targets(b);
    for (int w = 0; w < b; ++w) {
      const auto x = e.walkers.walker(w);
      walkers[w].assign(x.begin(), x.end());
      const auto points = as_points(x);
      targets[w] = canon::eval_hf_orbitals(*e.hf, *e.canon, points);
    }
    const auto r = ansatz_.pretrain_gradient(params_, e.system, walkers, targets,
                                             config_.regularizer_weight);
    gradient += r.gradient / n_mol;
    row.loss += r.loss / n_mol;
    row.matching += r.matching / n_mol;
    row.regularizer += r.regularizer / n_mol;
  }
  if (!gradient.allFinite()) throw NumericalError("non-finite pretraining gradient");
  params_ = lamb_->step(params_, gradient);
  ++pretrain_step_;
  return row;
}

void Trainer::save_checkpoint(const std::filesystem::path& prefix) const {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  nlohmann::json meta;
  meta["format"] = "moonlet-checkpoint-1";
  meta["config_hash"] = config_hash();
  meta["step"] = step_;
  meta["pretrain_step"] = pretrain_step_;
  meta["n_params"] = ansatz_.n_params();
  meta["network"] = wf::to_json(ansatz_.config());
  meta["parameter_layout"] = ansatz_.registry().describe();
  meta["train_config"] = to_json(config_);
  std::vector<double> positions;
  for (const auto& e : molecules_) {
    meta["molecules"].push_back({{"name", e.name},
                                 {"walkers", e.walkers.size()},
                                 {"dim", e.walkers.dim},
                                 {"width", e.walkers.width},
                                 {"pmove", e.walkers.pmove},
                                 {"rng", {{"seed", e.walkers.seed}, {"counter", e.walkers.counter}}}});
    positions.insert(positions.end(), e.walkers.positions.begin(), e.walkers.positions.end());
  }
  std::ofstream out(with_suffix(prefix, ".json"));
  if (!out) throw Error("cannot write " + with_suffix(prefix, ".json").string());
  out << meta.dump(2) << "\n";
  save_params(with_suffix(prefix, ".params.bin"), params_);
  write_doubles(with_suffix(prefix, ".walkers.bin"), positions.data(), positions.size());
}

void Trainer::load_checkpoint(const std::filesystem::path& prefix) {
  const auto meta_path = with_suffix(prefix, ".json");
  std::ifstream in(meta_path);
  if (!in) throw Error("cannot read " + meta_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(meta_path.string() + ": " + ex.what());
  }
  if (meta.value("config_hash", std::string()) != config_hash())
    throw ConfigError(meta_path.string() + " was written for a different network or molecule set");
  const auto& mols = meta.at("molecules");
  if (mols.size() != molecules_.size())
    throw ConfigError(meta_path.string() + ": molecule count differs");
  std::size_t total = 0;
  for (std::size_t i = 0; i < mols.size(); ++i)
    total += mols[i].at("walkers").get<std::size_t>() * mols[i].at("dim").get<std::size_t>();
  const std::vector<double> positions = read_doubles(with_suffix(prefix, ".walkers.bin"));
  if (positions.size() != total) throw ParseError("walker blob does not match the metadata");
  params_ = load_params(with_suffix(prefix, ".params.bin"), ansatz_.n_params());
  std::size_t at = 0;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    WalkerSet& w = molecules_[i].walkers;
    const int count = mols[i].at("walkers").get<int>();
    w.dim = mols[i].at("dim").get<int>();
    w.positions.assign(positions.begin() + at, positions.begin() + at + count * w.dim);
    at += static_cast<std::size_t>(count) * w.dim;
    w.log_abs.assign(count, -std::numeric_limits<double>::infinity());
    w.width = mols[i].at("width").get<double>();
    w.pmove = mols[i].at("pmove").get<double>();
    w.seed = mols[i].at("rng").at("seed").get<std::uint64_t>();
    w.counter = mols[i].at("rng").at("counter").get<std::uint64_t>();
  }
  step_ = meta.at("step").get<int>();
  pretrain_step_ = meta.value("pretrain_step", 0);
  nan_streak_ = 0;
  burned_in_ = true;
}

void save_params(const std::filesystem::path& path, const Eigen::VectorXd& params) {
  write_doubles(path, params.data(), static_cast<std::size_t>(params.size()));
}

Eigen::VectorXd load_params(const std::filesystem::path& path, int expected_size) {
  const std::vector<double> v = read_doubles(path);
  if (static_cast<int>(v.size()) != expected_size)
    throw ConfigError(path.string() + " holds " + std::to_string(v.size()) +
                      " parameters, expected " + std::to_string(expected_size));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), expected_size);
}

Evaluation evaluate(const wf::Ansatz& ansatz, const Eigen::VectorXd& params,
                    const wf::System& system, const EvaluateOptions& options) {
  if (options.walkers <= 0 || options.iterations <= 0 || options.mcmc_steps <= 0)
    throw ConfigError("evaluation needs positive walker, iteration and MCMC step counts");
  const std::vector<double> reparam = ansatz.reparametrize(params, system);
  const LogAmplitudeFn fn = [&](std::span<const double> x) {
    return ansatz.log_psi(params, reparam, system, x).log_abs;
  };
  WalkerSet walkers = init_walkers(system, options.walkers, options.seed, options.initial_width);
  refresh_log_abs(walkers, fn);
  TrainConfig mh;
  run_substeps(walkers, fn, options.burn_in, options.mcmc_steps, mh);

  Evaluation out;
  double sum = 0.0, sum_sq = 0.0, pmove = 0.0;
  for (int it = 0; it < options.iterations; ++it) {
    MHOptions o;
    o.substeps = options.mcmc_steps;
    pmove += mh_iteration(walkers, fn, o);
    const std::vector<double> e = local_energies(ansatz, params, reparam, system, walkers);
    double it_sum = 0.0;
    long it_count = 0;
    for (double v : e)
      if (std::isfinite(v)) {
        it_sum += v;
        sum += v;
        sum_sq += v * v;
        ++it_count;
      }
    out.samples += it_count;
    if (it_count > 0) out.iteration_means.push_back(it_sum / it_count);
  }
  if (out.samples == 0) throw NumericalError("every local energy was non-finite");
  out.energy = sum / out.samples;
  out.std = std::sqrt(std::max(0.0, sum_sq / out.samples - out.energy * out.energy));
  out.pmove = pmove / options.iterations;
  const auto& means = out.iteration_means;
  if (means.size() > 1) {
    double m = 0.0, v = 0.0;
    for (double x : means) m += x / means.size();
    for (double x : means) v += (x - m) * (x - m) / (means.size() - 1);
    out.stderr_ = std::sqrt(v / means.size());
  }
  return out;
}

}  // namespace moonlet::vmc
