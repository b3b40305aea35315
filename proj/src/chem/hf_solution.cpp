// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/chem/hf_solution.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "moonlet/errors.hpp"

namespace moonlet::chem {

using nlohmann::json;

namespace {

const json& require(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key))
    throw ParseError("missing field '" + where + key + "'");
  return doc.at(key);
}

template <class T>
T get_as(const json& value, const std::string& field) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ParseError("field '" + field + "' has the wrong type");
  }
}

Vec3 parse_vec3(const json& value, const std::string& field) {
  if (!value.is_array() || value.size() != 3)
    throw ParseError("field '" + field + "' must be a 3-element array");
  Vec3 v;
  for (int k = 0; k < 3; ++k) v[k] = get_as<double>(value[k], field);
  return v;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::vector<Nucleus> parse_atoms(const json& doc, std::vector<int>* ao_counts) {
  const json& atoms = require(doc, "atoms", "");
  if (!atoms.is_array()) throw ParseError("field 'atoms' must be an array");
  std::vector<Nucleus> nuclei;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string where = "atoms[" + std::to_string(i) + "].";
    Nucleus n;
    n.position = parse_vec3(require(atoms[i], "position", where), where + "position");
    n.charge = get_as<int>(require(atoms[i], "charge", where), where + "charge");
    if (ao_counts)
      ao_counts->push_back(get_as<int>(require(atoms[i], "n_ao", where), where + "n_ao"));
    nuclei.push_back(n);
  }
  return nuclei;
}

}  // namespace

double AtomicOrbital::evaluate(const Vec3& d) const {
  const double r2 = d.squaredNorm();
  double radial = 0.0;
  for (const auto& p : primitives) radial += p.coefficient * std::exp(-p.exponent * r2);
  double poly = 1.0;
  for (int k = 0; k < 3; ++k)
    for (int e = 0; e < cartesian[k]; ++e) poly *= d[k];
  return poly * radial;
}

int HFSolution::ao_offset(int atom) const {
  return std::accumulate(ao_per_atom.begin(), ao_per_atom.begin() + atom, 0);
}

Eigen::MatrixXd HFSolution::evaluate_aos(std::span<const Vec3> electrons) const {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(electrons.size()), n_ao());
  for (std::size_t i = 0; i < electrons.size(); ++i) {
    for (int a = 0; a < n_ao(); ++a) {
      const auto& ao = atomic_orbitals[a];
      values(static_cast<Eigen::Index>(i), a) =
          ao.evaluate(electrons[i] - molecule.position(ao.center));
    }
  }
  return values;
}

Molecule parse_molecule(const json& doc) {
  std::string name = doc.is_object() && doc.contains("name")
                         ? get_as<std::string>(doc.at("name"), "name")
                         : std::string("molecule");
  return Molecule(std::move(name), parse_atoms(doc, nullptr));
}

Molecule load_molecule(const std::filesystem::path& path) { return parse_molecule(read_json(path)); }

json molecule_to_json(const Molecule& molecule) {
  json atoms = json::array();
  for (const auto& n : molecule.nuclei())
    atoms.push_back({{"position", {n.position.x(), n.position.y(), n.position.z()}},
                     {"charge", n.charge}});
  return {{"name", molecule.name()}, {"atoms", atoms}};
}

HFSolution parse_hf_solution(const json& doc) {
  std::vector<int> ao_counts;
  std::vector<Nucleus> nuclei = parse_atoms(doc, &ao_counts);
  std::string name = doc.contains("name") ? get_as<std::string>(doc.at("name"), "name")
                                          : std::string("molecule");
  Molecule molecule(name, std::move(nuclei));

  const std::string basis = get_as<std::string>(require(doc, "basis", ""), "basis");

  const json& ao_json = require(doc, "ao_params", "");
  if (!ao_json.is_array()) throw ParseError("field 'ao_params' must be an array");
  std::vector<AtomicOrbital> aos;
  for (std::size_t i = 0; i < ao_json.size(); ++i) {
    const std::string where = "ao_params[" + std::to_string(i) + "].";
    const json& entry = ao_json[i];
    AtomicOrbital ao;
    ao.center = get_as<int>(require(entry, "center", where), where + "center");
    ao.angular_momentum =
        get_as<int>(require(entry, "angular_momentum", where), where + "angular_momentum");
    if (entry.contains("cartesian")) {
      const json& c = entry.at("cartesian");
      if (!c.is_array() || c.size() != 3)
        throw ParseError("field '" + where + "cartesian' must be a 3-element array");
      for (int k = 0; k < 3; ++k) ao.cartesian[k] = get_as<int>(c[k], where + "cartesian");
    } else if (ao.angular_momentum != 0) {
      throw ParseError("missing field '" + where + "cartesian' for l > 0");
    }
    if (ao.cartesian[0] + ao.cartesian[1] + ao.cartesian[2] != ao.angular_momentum)
      throw ParseError("field '" + where + "cartesian' disagrees with angular_momentum");
    const json& prims = require(entry, "primitives", where);
    if (!prims.is_array() || prims.empty())
      throw ParseError("field '" + where + "primitives' must be a non-empty array");
    for (std::size_t k = 0; k < prims.size(); ++k) {
      const std::string pw = where + "primitives[" + std::to_string(k) + "].";
      GaussianPrimitive p;
      p.exponent = get_as<double>(require(prims[k], "exponent", pw), pw + "exponent");
      p.coefficient = get_as<double>(require(prims[k], "coefficient", pw), pw + "coefficient");
      if (!(p.exponent > 0.0)) throw ParseError("field '" + pw + "exponent' must be positive");
      ao.primitives.push_back(p);
    }
    if (ao.center < 0 || ao.center >= molecule.size())
      throw ParseError("field '" + where + "center' is out of range");
    aos.push_back(std::move(ao));
  }

  const int n_ao = std::accumulate(ao_counts.begin(), ao_counts.end(), 0);
  if (n_ao != static_cast<int>(aos.size()))
    throw ValidationError("sum of atoms[].n_ao (" + std::to_string(n_ao) +
                          ") does not match the number of ao_params (" +
                          std::to_string(aos.size()) + ")");
  // Columns must be grouped by atom, in atom order.
  {
    int column = 0;
    for (int m = 0; m < molecule.size(); ++m) {
      for (int k = 0; k < ao_counts[m]; ++k, ++column) {
        if (aos[column].center != m)
          throw ValidationError("ao_params[" + std::to_string(column) +
                                "] is not in the block of atom " + std::to_string(m));
      }
    }
  }

  const json& coeff_json = require(doc, "coefficients", "");
  if (!coeff_json.is_array()) throw ParseError("field 'coefficients' must be an array");
  std::vector<double> flat;
  flat.reserve(coeff_json.size());
  for (const auto& v : coeff_json) flat.push_back(get_as<double>(v, "coefficients"));
  if (n_ao == 0 || flat.size() % static_cast<std::size_t>(n_ao) != 0)
    throw ValidationError("coefficients length " + std::to_string(flat.size()) +
                          " is not a multiple of eta = " + std::to_string(n_ao));
  const int n_mo = static_cast<int>(flat.size()) / n_ao;
  const int expected_mo = (molecule.total_charge() + 1) / 2;
  if (n_mo != expected_mo)
    throw ValidationError("coefficients have " + std::to_string(n_mo) +
                          " rows, expected ceil(sum Z / 2) = " + std::to_string(expected_mo));

  HFSolution hf{molecule, ao_counts, basis, std::move(aos),
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(flat.data(), n_mo, n_ao)};
  Eigen::FullPivLU<Eigen::MatrixXd> lu(hf.coefficients);
  lu.setThreshold(1e-10);
  if (lu.rank() < n_mo)
    throw ValidationError("coefficient matrix has rank " + std::to_string(lu.rank()) +
                          " < " + std::to_string(n_mo));
  return hf;
}

HFSolution load_hf_solution(const std::filesystem::path& path) {
  return parse_hf_solution(read_json(path));
}

json hf_solution_to_json(const HFSolution& hf) {
  json doc = molecule_to_json(hf.molecule);
  for (std::size_t m = 0; m < hf.ao_per_atom.size(); ++m)
    doc["atoms"][m]["n_ao"] = hf.ao_per_atom[m];
  doc["basis"] = hf.basis;
  json aos = json::array();
  for (const auto& ao : hf.atomic_orbitals) {
    json prims = json::array();
    for (const auto& p : ao.primitives)
      prims.push_back({{"exponent", p.exponent}, {"coefficient", p.coefficient}});
    aos.push_back({{"center", ao.center},
                   {"angular_momentum", ao.angular_momentum},
                   {"cartesian", ao.cartesian},
                   {"primitives", prims}});
  }
  doc["ao_params"] = aos;
  json coeffs = json::array();
  for (int i = 0; i < hf.n_mo(); ++i)
    for (int j = 0; j < hf.n_ao(); ++j) coeffs.push_back(hf.coefficients(i, j));
  doc["coefficients"] = coeffs;
  return doc;
}

}  // namespace moonlet::chem
