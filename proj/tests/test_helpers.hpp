// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "moonlet/chem/hf_solution.hpp"
#include "moonlet/chem/molecule.hpp"

namespace moonlet::testing {

inline std::string data_path(const std::string& relative) {
  return std::string(MOONLET_DATA_DIR) + "/" + relative;
}

inline chem::Molecule molecule(const std::string& name) {
  return chem::load_molecule(data_path("molecules/" + name + ".json"));
}

inline chem::HFSolution hf(const std::string& name) {
  return chem::load_hf_solution(data_path("hf/" + name + ".json"));
}

/// Molecules without spatial symmetry, so their frames are unique.
inline std::vector<chem::Molecule> asymmetric_molecules() {
  using chem::Vec3;
  return {
      chem::Molecule("h3", {{Vec3(0.0, 0.0, 0.0), 1}, {Vec3(1.6, 0.1, 0.0), 1}, {Vec3(0.4, 2.3, 0.5), 1}}),
      chem::Molecule("h4", {{Vec3(0.0, 0.0, 0.0), 1},
                            {Vec3(1.4, 0.1, 0.2), 1},
                            {Vec3(0.3, 2.6, -0.1), 1},
                            {Vec3(1.9, 2.9, 0.6), 1}}),
      chem::Molecule("lih2", {{Vec3(0.0, 0.0, 0.0), 3}, {Vec3(3.0, 0.2, 0.0), 1}, {Vec3(-0.8, 2.7, 0.4), 1}}),
  };
}

inline chem::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  return q.normalized().toRotationMatrix();
}

inline chem::Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  return {normal(rng), normal(rng), normal(rng)};
}

}  // namespace moonlet::testing
