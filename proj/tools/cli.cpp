// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "moonlet/canon/canonicalize.hpp"
#include "moonlet/chem/hf_solution.hpp"
#include "moonlet/errors.hpp"
#include "moonlet/topology/orbitals.hpp"
#include "moonlet/vmc/trainer.hpp"
#include "moonlet/wf/system.hpp"

namespace moonlet::cli {

namespace fs = std::filesystem;

namespace {

/// Bad flags, unknown configuration keys and malformed values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw UsageError("invalid value '" + text + "' for key '" + key + "'");
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (in >> item) {
    std::size_t start = 0;
    for (std::size_t comma; (comma = item.find(',', start)) != std::string::npos; start = comma + 1)
      if (comma > start) out.push_back(item.substr(start, comma - start));
    if (start < item.size()) out.push_back(item.substr(start));
  }
  return out;
}

struct Settings {
  wf::NetworkConfig network = wf::NetworkConfig::desk();
  vmc::TrainConfig train;
  vmc::EvaluateOptions evaluate;
  std::vector<std::string> molecules;
  std::vector<std::string> hf;
  std::string out = "moonlet_out";
};

using Setter = std::function<void(Settings&, const std::string&, const std::string&)>;

template <class T, class Field>
Setter number(Field field) {
  return [field](Settings& s, const std::string& key, const std::string& v) {
    field(s) = parse_number<T>(key, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
#define MOONLET_NET(section, member, type)                                                     \
  t["network." #section "_" #member] = number<type>([](Settings& s) -> type& {                 \
    return s.network.section.member;                                                          \
  });
    MOONLET_NET(globe, embedding_dim, int)
    MOONLET_NET(globe, message_dim, int)
    MOONLET_NET(globe, atom_layers, int)
    MOONLET_NET(globe, orbital_layers, int)
    MOONLET_NET(globe, filter_hidden, int)
    MOONLET_NET(globe, filter_ranges, int)
    MOONLET_NET(globe, head_hidden, int)
    MOONLET_NET(moon, hidden_dim, int)
    MOONLET_NET(moon, ee_dim, int)
    MOONLET_NET(moon, updates, int)
    MOONLET_NET(moon, filter_hidden, int)
    MOONLET_NET(moon, filter_ranges, int)
    MOONLET_NET(moon, jastrow_hidden, int)
#undef MOONLET_NET
    t["network.determinants"] = number<int>([](Settings& s) -> int& { return s.network.moon.determinants; });
#define MOONLET_TRAIN(member, type) \
  t["train." #member] = number<type>([](Settings& s) -> type& { return s.train.member; });
    MOONLET_TRAIN(steps, int)
    MOONLET_TRAIN(walkers, int)
    MOONLET_TRAIN(mcmc_steps, int)
    MOONLET_TRAIN(burn_in, int)
    MOONLET_TRAIN(target_pmove, double)
    MOONLET_TRAIN(width_kappa, double)
    MOONLET_TRAIN(initial_width, double)
    MOONLET_TRAIN(clip_multiplier, double)
    MOONLET_TRAIN(damping, double)
    MOONLET_TRAIN(cg_steps, int)
    MOONLET_TRAIN(lr, double)
    MOONLET_TRAIN(lr_decay, double)
    MOONLET_TRAIN(max_norm, double)
    MOONLET_TRAIN(pretrain_steps, int)
    MOONLET_TRAIN(pretrain_lr, double)
    MOONLET_TRAIN(pretrain_mcmc_steps, int)
    MOONLET_TRAIN(regularizer_weight, double)
    MOONLET_TRAIN(checkpoint_every, int)
    MOONLET_TRAIN(seed, std::uint64_t)
#undef MOONLET_TRAIN
#define MOONLET_EVAL(member, type) \
  t["evaluate." #member] = number<type>([](Settings& s) -> type& { return s.evaluate.member; });
    MOONLET_EVAL(walkers, int)
    MOONLET_EVAL(iterations, int)
    MOONLET_EVAL(mcmc_steps, int)
    MOONLET_EVAL(burn_in, int)
    MOONLET_EVAL(initial_width, double)
    MOONLET_EVAL(seed, std::uint64_t)
#undef MOONLET_EVAL
    t["run.molecules"] = [](Settings& s, const std::string&, const std::string& v) {
      s.molecules = split_list(v);
    };
    t["run.hf"] = [](Settings& s, const std::string&, const std::string& v) { s.hf = split_list(v); };
    t["run.out"] = [](Settings& s, const std::string&, const std::string& v) { s.out = v; };
    return t;
  }();
  return table;
}

void apply_config_file(Settings& s, const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("config file " + e.message() + " (" + e.filename() + ":" +
                     std::to_string(e.line()) + ")");
  }
  const fs::path base = fs::path(path).parent_path();
  // The preset replaces the whole network, so it goes first.
  if (auto net = tree.get_child_optional("network"))
    if (auto preset = net->get_optional<std::string>("preset"))
      s.network = wf::NetworkConfig::preset(*preset);
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty())
      throw UsageError("unknown key '" + section + "' outside of a section");
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      if (full == "network.preset") continue;
      const auto it = setters().find(full);
      if (it == setters().end()) throw UsageError("unknown config key '" + full + "'");
      it->second(s, full, value.data());
    }
  }
  // Relative paths in the file are relative to the file.
  for (auto* list : {&s.molecules, &s.hf})
    for (auto& p : *list)
      if (fs::path(p).is_relative()) p = (base / p).string();
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<vmc::MoleculeInput> load_inputs(const Settings& s, bool need_hf) {
  if (s.molecules.empty()) throw UsageError("at least one --molecule is required");
  if (need_hf && s.hf.size() != s.molecules.size())
    throw ConfigError("pretraining needs one --hf file per molecule (" +
                      std::to_string(s.molecules.size()) + " molecules, " +
                      std::to_string(s.hf.size()) + " reference files)");
  std::vector<vmc::MoleculeInput> out;
  for (std::size_t i = 0; i < s.molecules.size(); ++i) {
    vmc::MoleculeInput in{stem(s.molecules[i]), chem::load_molecule(s.molecules[i]), std::nullopt};
    if (i < s.hf.size()) in.hf = chem::load_hf_solution(s.hf[i]);
    out.push_back(std::move(in));
  }
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

int cmd_localize(const std::string& molecule_path, const std::string& out_path, std::ostream& out) {
  const wf::System system = wf::System::build(chem::load_molecule(molecule_path));
  std::ostringstream csv;
  csv << "index,x,y,z,type\n" << std::setprecision(12);
  const auto& orbitals = system.orbitals.orbitals;
  for (std::size_t i = 0; i < orbitals.size(); ++i) {
    const auto& o = orbitals[i];
    csv << i << ',' << o.location.x() << ',' << o.location.y() << ',' << o.location.z() << ','
        << topology::type_tag(o.type) << '\n';
  }
  if (out_path.empty()) {
    out << csv.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write " + out_path);
    f << csv.str();
  }
  return 0;
}

int cmd_canonicalize(const std::string& in_path, const std::string& out_path, std::ostream& out) {
  const chem::HFSolution hf = chem::load_hf_solution(in_path);
  const wf::System system = wf::System::build(hf.molecule);
  const canon::LocalityMask mask = canon::build_mask(system.orbitals, hf);
  const canon::CanonicalizedHF c = canon::canonicalize(hf, mask);
  chem::HFSolution transformed = hf;
  transformed.coefficients = c.coefficients;
  nlohmann::json doc = chem::hf_solution_to_json(transformed);
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < c.transform.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < c.transform.cols(); ++j) row.push_back(c.transform(i, j));
    a.push_back(row);
  }
  doc["canonicalization"] = {{"transform", a},
                             {"signs", std::vector<double>(c.signs.data(), c.signs.data() + c.signs.size())},
                             {"loss_trace", c.loss_trace},
                             {"converged", c.converged}};
  std::ofstream f(out_path);
  if (!f) throw Error("cannot write " + out_path);
  f << doc.dump(1) << "\n";
  out << "canonicalized " << hf.n_mo() << " orbitals, final loss "
      << (c.loss_trace.empty() ? 0.0 : c.loss_trace.back())
      << (c.converged ? "" : " (not converged)") << "\n";
  return 0;
}

void load_initial(vmc::Trainer& t, const std::string& init) {
  if (init.empty()) return;
  t.set_params(vmc::load_params(init + ".params.bin", t.ansatz().n_params()));
}

int cmd_pretrain(const Settings& s, const std::string& init, std::ostream& out, std::ostream& err) {
  vmc::Trainer t(s.network, s.train, load_inputs(s, true));
  load_initial(t, init);
  fs::create_directories(s.out);
  std::ofstream csv(fs::path(s.out) / "pretrain.csv");
  csv << "step,loss,matching,regularizer\n" << std::setprecision(12);
  for (int k = 0; k < s.train.pretrain_steps; ++k) {
    const vmc::PretrainRow r = t.pretrain_step();
    csv << r.step << ',' << r.loss << ',' << r.matching << ',' << r.regularizer << '\n';
    if ((k + 1) % 100 == 0) err << "pretrain step " << k + 1 << " loss " << r.loss << "\n";
  }
  t.save_checkpoint(fs::path(s.out) / "pretrained");
  out << "wrote " << (fs::path(s.out) / "pretrained").string() << "\n";
  return 0;
}

int cmd_train(const Settings& s, const std::string& init, const std::string& resume,
              std::ostream& out, std::ostream& err) {
  vmc::Trainer t(s.network, s.train, load_inputs(s, false));
  load_initial(t, init);
  if (!resume.empty()) t.load_checkpoint(resume);
  const fs::path dir(s.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "trace.csv");
  vmc::write_trace_header(csv);
  try {
    while (t.step_count() < s.train.steps) {
      for (const auto& row : t.step()) vmc::write_trace_row(csv, row);
      csv.flush();
      const int done = t.step_count();
      if (s.train.checkpoint_every > 0 && done % s.train.checkpoint_every == 0)
        t.save_checkpoint(dir / ("ckpt_" + std::to_string(done)));
      if (done % 100 == 0) err << "step " << done << "\n";
    }
  } catch (const NumericalError&) {
    t.save_checkpoint(dir / "diagnostic");
    err << "state at failure written to " << (dir / "diagnostic").string() << "\n";
    throw;
  }
  t.save_checkpoint(dir / "final");
  out << "wrote " << (dir / "final").string() << "\n";
  return 0;
}

int cmd_evaluate(const Settings& s, const std::string& checkpoint, std::ostream& out) {
  if (checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (s.molecules.size() != 1) throw UsageError("evaluate takes exactly one --molecule");
  const nlohmann::json meta = read_json(checkpoint + ".json");
  if (!meta.contains("network")) throw ParseError(checkpoint + ".json has no network section");
  const wf::Ansatz ansatz(wf::network_from_json(meta.at("network")));
  const Eigen::VectorXd params = vmc::load_params(checkpoint + ".params.bin", ansatz.n_params());
  const wf::System system = wf::System::build(chem::load_molecule(s.molecules[0]));
  const vmc::Evaluation e = vmc::evaluate(ansatz, params, system, s.evaluate);
  out << std::setprecision(10) << stem(s.molecules[0]) << " energy " << e.energy << " stderr "
      << e.stderr_ << " std " << e.std << " samples " << e.samples << " pmove " << e.pmove
      << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transferable neural wave functions for molecules"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string molecule_path, localize_out, canon_in, canon_out, config_path, init, resume,
      checkpoint, preset;
  std::vector<std::string> molecules, hf;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps, walkers, determinants, iterations;
  std::optional<std::string> out_dir;

  auto* localize = app.add_subcommand("localize", "Print the localized orbital table as CSV");
  localize->add_option("molecule", molecule_path, "Molecule JSON")->required();
  localize->add_option("--out", localize_out, "Write the CSV to a file");

  auto* canonicalize = app.add_subcommand("canonicalize", "Canonicalize reference orbitals");
  canonicalize->add_option("input", canon_in, "Exchange-format JSON")->required();
  canonicalize->add_option("output", canon_out, "Output JSON")->required();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file");
    sub->add_option("--molecule", molecules, "Molecule JSON (repeatable)");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--walkers", walkers, "Total walkers");
    sub->add_option("--out", out_dir, "Output directory");
  };
  auto* pretrain = app.add_subcommand("pretrain", "Match orbitals to reference solutions");
  auto* train = app.add_subcommand("train", "Variational optimization");
  for (auto* sub : {pretrain, train}) {
    add_common(sub);
    sub->add_option("--steps", steps, "Number of steps");
    sub->add_option("--determinants", determinants, "Number of determinants");
    sub->add_option("--preset", preset, "Network preset (desk or full)");
    sub->add_option("--init", init, "Checkpoint prefix to take parameters from");
  }
  pretrain->add_option("--hf", hf, "Reference orbitals per molecule (repeatable)");
  train->add_option("--resume", resume, "Checkpoint prefix to resume from");
  auto* evaluate = app.add_subcommand("evaluate", "Estimate the energy with fixed parameters");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint prefix")->required();
  evaluate->add_option("--steps", iterations, "Measurement iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (localize->parsed()) return cmd_localize(molecule_path, localize_out, out);
    if (canonicalize->parsed()) return cmd_canonicalize(canon_in, canon_out, out);

    Settings s;
    if (!config_path.empty()) apply_config_file(s, config_path);
    if (!preset.empty()) s.network = wf::NetworkConfig::preset(preset);
    if (!molecules.empty()) s.molecules = molecules;
    if (!hf.empty()) s.hf = hf;
    if (out_dir) s.out = *out_dir;
    if (seed) s.train.seed = s.evaluate.seed = *seed;
    if (walkers) s.train.walkers = s.evaluate.walkers = *walkers;
    if (steps) s.train.steps = s.train.pretrain_steps = *steps;
    if (iterations) s.evaluate.iterations = *iterations;
    if (determinants) s.network.moon.determinants = *determinants;
    s.train.validate();

    if (pretrain->parsed()) return cmd_pretrain(s, init, out, err);
    if (train->parsed()) return cmd_train(s, init, resume, out, err);
    return cmd_evaluate(s, checkpoint, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace moonlet::cli
