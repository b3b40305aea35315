// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/topology/orbitals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "moonlet/errors.hpp"

namespace moonlet::topology {

int valency(int charge) {
  static constexpr int kTable[] = {1, 0, 1, 2, 3, 4, 3, 2, 1, 0};
  if (charge < 1 || charge > 10)
    throw UnsupportedElementError("element with Z = " + std::to_string(charge) +
                                  " is not supported (1 <= Z <= 10)");
  return kTable[charge - 1];
}

namespace {

struct Candidate {
  int m = 0;
  int n = 0;
  double score = 0.0;
  double center_distance = 0.0;
  double polar = 0.0;
  double azimuth = 0.0;
};

// True if a should be picked over b (scores already tied).
bool preferred(const Candidate& a, const Candidate& b) {
  constexpr double kTol = 1e-9;
  if (std::abs(a.center_distance - b.center_distance) > kTol)
    return a.center_distance > b.center_distance;
  if (std::abs(a.polar - b.polar) > kTol) return a.polar < b.polar;
  if (std::abs(a.azimuth - b.azimuth) > kTol) return a.azimuth < b.azimuth;
  return std::tie(a.m, a.n) < std::tie(b.m, b.n);
}

}  // namespace

OrbitalSet localize_orbitals(const chem::Molecule& molecule, const chem::Frame& frame,
                             const LocalizationOptions& options) {
  const int n_atoms = molecule.size();
  OrbitalSet result;

  std::vector<int> free_valence(n_atoms);
  int total_valence = 0;
  for (int i = 0; i < n_atoms; ++i) {
    const int z = molecule.charge(i);
    const int v = valency(z);
    free_valence[i] = v;
    total_valence += v;
    const int n_core = (z - v + 1) / 2;
    for (int j = 1; j <= n_core; ++j)
      result.orbitals.push_back({molecule.position(i), CoreType{z, j}, i, i});
  }

  std::vector<double> distance(n_atoms * n_atoms);
  std::vector<int> bond_order(n_atoms * n_atoms, 0);
  for (int m = 0; m < n_atoms; ++m)
    for (int n = 0; n < n_atoms; ++n)
      distance[m * n_atoms + n] =
          m == n ? options.c_self : (molecule.position(m) - molecule.position(n)).norm();

  const int n_valence_orbitals = (total_valence + 1) / 2;
  for (int it = 0; it < n_valence_orbitals; ++it) {
    double best_score = 0.0;
    for (int m = 0; m < n_atoms; ++m)
      for (int n = m; n < n_atoms; ++n) {
        if (free_valence[m] <= 0 || free_valence[n] <= 0) continue;
        const double s = 1.0 / (distance[m * n_atoms + n] + 0.5 * bond_order[m * n_atoms + n]);
        best_score = std::max(best_score, s);
      }
    if (best_score <= 0.0)
      throw InfeasibleValencyError("molecule '" + molecule.name() +
                                   "': no pair with free valence left for valence orbital " +
                                   std::to_string(it + 1));

    std::optional<Candidate> pick;
    for (int m = 0; m < n_atoms; ++m)
      for (int n = m; n < n_atoms; ++n) {
        if (free_valence[m] <= 0 || free_valence[n] <= 0) continue;
        const double s = 1.0 / (distance[m * n_atoms + n] + 0.5 * bond_order[m * n_atoms + n]);
        if (s < best_score * (1.0 - 1e-12)) continue;
        const Vec3 mid = frame.to_local(0.5 * (molecule.position(m) + molecule.position(n)));
        Candidate c{m, n, s, mid.norm(), 0.0, std::atan2(mid.y(), mid.x())};
        c.polar = c.center_distance > 0.0 ? std::acos(std::clamp(mid.z() / c.center_distance, -1.0, 1.0))
                                          : 0.0;
        if (!pick || preferred(c, *pick)) pick = c;
      }

    const int m = pick->m;
    const int n = pick->n;
    free_valence[m] -= 1;
    free_valence[n] -= 1;
    const int order = ++bond_order[m * n_atoms + n];
    if (m != n) bond_order[n * n_atoms + m] = order;
    result.orbitals.push_back(
        {0.5 * (molecule.position(m) + molecule.position(n)), ValenceType{order}, m, n});
  }

  std::map<std::pair<int, int>, int> multiplicity;
  for (const auto& orb : result.orbitals)
    if (std::holds_alternative<ValenceType>(orb.type)) ++multiplicity[{orb.atom_a, orb.atom_b}];
  for (const auto& [pair, count] : multiplicity)
    result.bonds.push_back({pair.first, pair.second, count});
  return result;
}

std::string type_tag(const OrbitalType& type) {
  if (const auto* core = std::get_if<CoreType>(&type))
    return "core(" + std::to_string(core->charge) + ";" + std::to_string(core->shell) + ")";
  return "valence(" + std::to_string(std::get<ValenceType>(type).order) + ")";
}

int type_index(const OrbitalType& type) {
  if (const auto* core = std::get_if<CoreType>(&type)) {
    const int shell = std::clamp(core->shell, 1, 5);
    return (std::clamp(core->charge, 1, 10) - 1) * 5 + (shell - 1);
  }
  const int order = std::clamp(std::get<ValenceType>(type).order, 1, kMaxValenceOrder);
  return 50 + order - 1;
}

}  // namespace moonlet::topology
