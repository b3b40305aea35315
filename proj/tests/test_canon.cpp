// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "moonlet/canon/canonicalize.hpp"
#include "moonlet/errors.hpp"
#include "test_helpers.hpp"

using namespace moonlet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

canon::LocalityMask mask_for(const chem::HFSolution& hf) {
  const chem::Frame frame = chem::build_frame(hf.molecule);
  return canon::build_mask(topology::localize_orbitals(hf.molecule, frame), hf);
}

double assignment_cost(const MatrixXd& cost, const std::vector<int>& perm) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(perm.size()); ++i) total += cost(i, perm[i]);
  return total;
}

double brute_force(const MatrixXd& cost) {
  std::vector<int> perm(cost.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do best = std::min(best, assignment_cost(cost, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("H2O mask matches the reference table") {
  const canon::LocalityMask mask = mask_for(testing::hf("h2o"));
  MatrixXd expected(5, 7);
  expected << 1, 0, 0, 0, 0, 0, 0,  //
      0, 1, 0, 0, 0, 0, 0,          //
      0, 0, 1, 0, 0, 0, 0,          //
      0, 0, 0, 1, 1, 1, 0,          //
      0, 0, 0, 1, 1, 0, 1;
  CHECK(mask.values.transpose() == expected);
}

TEST_CASE("H2 and He masks") {
  const canon::LocalityMask h2 = mask_for(testing::hf("h2"));
  CHECK(h2.values == MatrixXd::Ones(2, 1));
  const canon::LocalityMask he = mask_for(testing::hf("he"));
  CHECK(he.values == MatrixXd::Ones(1, 1));
}

TEST_CASE("N2 mask gives each triple-bond orbital both atoms") {
  const chem::HFSolution n2 = testing::hf("n2");
  const canon::LocalityMask mask = mask_for(n2);
  for (int i = 0; i < mask.n_mo(); ++i) CHECK(mask.values.col(i).sum() >= 1.0);
  // The k-th orbital of the triple bond takes the k-th free AO of both atoms.
  for (int k = 0; k < 3; ++k) {
    CHECK(mask.values.col(4 + k).sum() == 2.0);
    CHECK(mask.values(2 + k, 4 + k) == 1.0);
    CHECK(mask.values(n2.ao_offset(1) + 2 + k, 4 + k) == 1.0);
  }
}

TEST_CASE("mask construction detects a basis that is too small") {
  chem::HFSolution h2o = testing::hf("h2o");
  topology::OrbitalSet set = topology::localize_orbitals(h2o.molecule, chem::build_frame(h2o.molecule));
  // Pretend both bonds land on the same hydrogen.
  set.orbitals[4].atom_b = set.orbitals[3].atom_b;
  set.orbitals[4].type = topology::ValenceType{2};
  h2o.ao_per_atom = {3, 2, 2};
  CHECK_THROWS_AS(canon::build_mask(set, h2o), BasisTooSmallError);
}

TEST_CASE("hungarian small examples") {
  MatrixXd identity_favoring = MatrixXd::Ones(4, 4) - MatrixXd::Identity(4, 4);
  CHECK(canon::hungarian(identity_favoring) == std::vector<int>{0, 1, 2, 3});
  MatrixXd cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto perm = canon::hungarian(cost);
  CHECK(perm == std::vector<int>{1, 0, 2});
  CHECK(assignment_cost(cost, perm) == 5.0);
  CHECK(canon::hungarian(MatrixXd::Constant(5, 5, 2.5)) == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("hungarian agrees with brute force") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 6;
    MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = uniform(rng);
    const auto perm = canon::hungarian(cost);
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) REQUIRE(sorted[i] == i);
    CHECK(assignment_cost(cost, perm) == doctest::Approx(brute_force(cost)).epsilon(1e-12));
  }
}

TEST_CASE("normalized loss gradient matches finite differences") {
  const chem::HFSolution h2o = testing::hf("h2o");
  const canon::LocalityMask mask = mask_for(h2o);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  MatrixXd a_hat = MatrixXd::Identity(5, 5);
  for (int i = 0; i < 25; ++i) a_hat(i) += 0.3 * normal(rng);
  MatrixXd grad;
  canon::locality_loss_normalized(h2o.coefficients, mask, a_hat, &grad);
  const double h = 1e-6;
  for (int i = 0; i < 25; ++i) {
    MatrixXd plus = a_hat, minus = a_hat;
    plus(i) += h;
    minus(i) -= h;
    const double fd = (canon::locality_loss_normalized(h2o.coefficients, mask, plus, nullptr) -
                       canon::locality_loss_normalized(h2o.coefficients, mask, minus, nullptr)) /
                      (2 * h);
    CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
  }
}

TEST_CASE("already local coefficients stay in place") {
  const canon::LocalityMask mask = mask_for(testing::hf("h2o"));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);
  MatrixXd local = mask.values;
  for (int i = 0; i < local.size(); ++i) local(i) *= uniform(rng);
  local.colwise().normalize();
  chem::HFSolution hf = testing::hf("h2o");
  hf.coefficients = local.transpose();
  const auto result = canon::canonicalize(hf, mask);
  CHECK((result.transform - MatrixXd::Identity(5, 5)).norm() < 1e-8);
  CHECK(result.signs == VectorXd::Ones(5));
  CHECK(result.loss_trace.back() < 1e-14);
}

TEST_CASE("canonicalize undoes a permutation with sign flips") {
  const canon::LocalityMask mask = mask_for(testing::hf("h2o"));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    MatrixXd local = mask.values;
    for (int i = 0; i < local.size(); ++i) local(i) *= uniform(rng);
    local.colwise().normalize();
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixXd p = MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) p(i, perm[i]) = (trial + i) % 2 ? -1.0 : 1.0;
    chem::HFSolution hf = testing::hf("h2o");
    hf.coefficients = (local * p.transpose()).transpose();
    const auto result = canon::canonicalize(hf, mask);
    CHECK(result.loss_trace.back() <= 1e-8);
    CHECK(std::abs(std::abs(result.transform.determinant()) - 1.0) <= 1e-9);
    // Recovered up to column signs.
    CHECK((result.transform.cwiseAbs() - p.cwiseAbs()).norm() < 1e-6);
    CHECK((result.coefficients.transpose() - local).norm() < 1e-6);
  }
}

TEST_CASE("canonicalize preserves the determinant in the square case") {
  // Two atoms with two AOs each and four single-atom orbitals.
  canon::LocalityMask mask{MatrixXd::Zero(4, 4)};
  mask.values.block(0, 0, 2, 2).setOnes();
  mask.values.block(2, 2, 2, 2).setOnes();
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  chem::HFSolution hf = testing::hf("h2");
  MatrixXd omega(4, 4);
  for (int i = 0; i < 16; ++i) omega(i) = normal(rng);
  hf.coefficients = omega;
  const auto result = canon::canonicalize(hf, mask);
  const MatrixXd omega_hat_t = omega.transpose() * result.transform;
  CHECK(std::abs(omega_hat_t.determinant()) ==
        doctest::Approx(std::abs(omega.determinant())).epsilon(1e-9));
  CHECK(canon::masked_out_energy(omega_hat_t, mask) < canon::masked_out_energy(omega.transpose(), mask));
}

TEST_CASE("canonicalized HF orbitals keep the wave function and become local") {
  for (const char* name : {"h2o", "lih", "h4", "n2"}) {
    const chem::HFSolution hf = testing::hf(name);
    const canon::LocalityMask mask = mask_for(hf);
    const auto result = canon::canonicalize(hf, mask);
    CHECK(std::abs(std::abs(result.transform.determinant()) - 1.0) <= 1e-9);
    const double before = canon::masked_out_energy(hf.coefficients.transpose(), mask);
    const double after = canon::masked_out_energy(result.coefficients.transpose(), mask);
    CHECK(after < before);
    // Signs are already canonical.
    CHECK(canon::canonical_signs(result.coefficients.transpose(), mask) == VectorXd::Ones(hf.n_mo()));

    std::mt19937_64 rng(21);
    const int n = hf.n_mo();
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<chem::Vec3> electrons;
      for (int i = 0; i < n; ++i)
        electrons.push_back(hf.molecule.position(i % hf.molecule.size()) + testing::random_vec(rng));
      const MatrixXd phi = hf.evaluate_aos(electrons) * hf.coefficients.transpose();
      const MatrixXd phi_hat = canon::eval_hf_orbitals(hf, result, electrons);
      const double d0 = std::abs(phi.determinant());
      CHECK(std::abs(phi_hat.determinant()) == doctest::Approx(d0).epsilon(1e-9));
    }
  }
}

TEST_CASE("canonical orbitals move with the molecule and flip sign on swaps") {
  const chem::HFSolution hf = testing::hf("lih");
  const auto result = canon::canonicalize(hf, mask_for(hf));
  std::vector<chem::Vec3> electrons{chem::Vec3(0.1, 0.2, -0.1), chem::Vec3(2.9, -0.3, 0.2)};
  const MatrixXd phi = canon::eval_hf_orbitals(hf, result, electrons);
  std::swap(electrons[0], electrons[1]);
  const MatrixXd swapped = canon::eval_hf_orbitals(hf, result, electrons);
  CHECK(swapped.determinant() == doctest::Approx(-phi.determinant()).epsilon(1e-12));

  const chem::Vec3 shift(1.0, -2.0, 3.0);
  std::vector<chem::Nucleus> moved = hf.molecule.nuclei();
  for (auto& n : moved) n.position += shift;
  chem::HFSolution translated = hf;
  translated.molecule = chem::Molecule(hf.molecule.name(), moved);
  for (auto& e : electrons) e += shift;
  std::swap(electrons[0], electrons[1]);
  CHECK((canon::eval_hf_orbitals(translated, result, electrons) - phi).norm() < 1e-12);
}

TEST_CASE("sign canonicalization is idempotent") {
  const chem::HFSolution hf = testing::hf("h2o");
  const canon::LocalityMask mask = mask_for(hf);
  const MatrixXd x = -hf.coefficients.transpose();
  const VectorXd d = canon::canonical_signs(x, mask);
  const MatrixXd once = x * d.asDiagonal();
  CHECK(canon::canonical_signs(once, mask) == VectorXd::Ones(5));
}
