// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "moonlet/chem/molecule.hpp"

namespace moonlet::chem {

struct GaussianPrimitive {
  double exponent = 0.0;
  /// Full coefficient; all normalization is folded in.
  double coefficient = 0.0;
};

/// Contracted cartesian Gaussian x^a y^b z^c sum_k c_k exp(-a_k r^2) centred on a nucleus.
struct AtomicOrbital {
  int center = 0;
  int angular_momentum = 0;
  std::array<int, 3> cartesian{0, 0, 0};
  std::vector<GaussianPrimitive> primitives;

  double evaluate(const Vec3& displacement) const;
};

/// Ingested Hartree-Fock solution: molecular orbital coefficients over an
/// atom-ordered atomic-orbital basis.
struct HFSolution {
  Molecule molecule;
  std::vector<int> ao_per_atom;  ///< O_m
  std::string basis;
  std::vector<AtomicOrbital> atomic_orbitals;
  /// Omega, shape n_mo x n_ao (rows: molecular orbitals, columns: AOs by atom).
  Eigen::MatrixXd coefficients;

  int n_mo() const { return static_cast<int>(coefficients.rows()); }
  int n_ao() const { return static_cast<int>(coefficients.cols()); }
  /// First AO column of atom m.
  int ao_offset(int atom) const;
  /// n_electrons x n_ao matrix of AO values at the given (global) positions.
  Eigen::MatrixXd evaluate_aos(std::span<const Vec3> electrons) const;
};

Molecule parse_molecule(const nlohmann::json& doc);
Molecule load_molecule(const std::filesystem::path& path);
nlohmann::json molecule_to_json(const Molecule& molecule);

/// Parses and validates (AO counts, row count, rank) an exchange document.
HFSolution parse_hf_solution(const nlohmann::json& doc);
HFSolution load_hf_solution(const std::filesystem::path& path);
nlohmann::json hf_solution_to_json(const HFSolution& hf);

}  // namespace moonlet::chem
