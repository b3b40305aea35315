// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "moonlet/errors.hpp"
#include "moonlet/vmc/estimators.hpp"
#include "moonlet/vmc/hamiltonian.hpp"
#include "moonlet/vmc/optimizer.hpp"
#include "moonlet/vmc/parallel.hpp"
#include "moonlet/vmc/sampler.hpp"
#include "moonlet/vmc/trainer.hpp"
#include "test_helpers.hpp"

namespace vmc = moonlet::vmc;
namespace wf = moonlet::wf;
namespace chem = moonlet::chem;
using chem::Vec3;
using moonlet::testing::molecule;
using moonlet::testing::random_vec;

namespace {

chem::Molecule atoms(std::vector<std::pair<int, Vec3>> list) {
  std::vector<chem::Nucleus> n;
  for (const auto& [z, p] : list) n.push_back({p, z});
  return chem::Molecule("test", n);
}

std::vector<double> random_electrons(const wf::System& s, std::mt19937_64& rng) {
  std::vector<double> x(3 * s.n_electrons());
  for (int i = 0; i < s.n_electrons(); ++i) {
    const Vec3 p = s.molecule.position(i % s.n_atoms()) + random_vec(rng, 1.0);
    for (int c = 0; c < 3; ++c) x[3 * i + c] = p[c];
  }
  return x;
}

// Emitted parameters for which the single orbital of a hydrogen atom is exp(-r).
std::vector<double> exact_hydrogen(const wf::Ansatz& ansatz, const wf::System& s,
                                   std::vector<double> reparam) {
  const auto& layout = ansatz.layout();
  const int d = ansatz.config().moon.hidden_dim;
  const int slots = 2 * ansatz.config().moon.determinants;
  const int orb = layout.orbital_offset(s.n_atoms(), 0);
  const int pair = layout.pair_offset(s.n_atoms(), s.n_orbitals(), 0, 0);
  for (int q = 0; q < slots; ++q) {
    for (int k = 0; k < d; ++k) reparam[orb + layout.orb_w + q * d + k] = 0.0;
    reparam[orb + layout.orb_b + q] = 1.0;
    reparam[pair + layout.pi_gate + q] = 5.0;
    reparam[pair + layout.decay + q] = moonlet::ad::softplus_inverse(1.0);
  }
  return reparam;
}

}  // namespace

TEST_CASE("potential: hand-computed examples") {
  const auto h2 = atoms({{1, {0, 0, 0}}, {1, {1.4, 0, 0}}});
  CHECK(vmc::nuclear_repulsion(h2) == doctest::Approx(1.0 / 1.4).epsilon(1e-15));
  CHECK(vmc::potential(h2, {}) == doctest::Approx(0.714285714285714).epsilon(1e-14));
  const auto h = atoms({{1, {0, 0, 0}}});
  const std::vector<double> one = {1.0, 0.0, 0.0};
  CHECK(vmc::potential(h, one) == doctest::Approx(-1.0).epsilon(1e-15));
  // Two electrons 2 apart, each 1 away from a far-off nucleus pair's reference.
  const std::vector<double> two = {-1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  const auto far = atoms({{1, {0, 1e6, 0}}});
  CHECK(vmc::potential(far, two) - 2 * vmc::potential(far, one) ==
        doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("local energy: exact hydrogen eigenfunction gives -1/2 everywhere") {
  wf::Ansatz ansatz(wf::NetworkConfig::desk());
  const auto system = wf::System::build(molecule("h"));
  const Eigen::VectorXd params = ansatz.initialize(3);
  const auto reparam = exact_hydrogen(ansatz, system, ansatz.reparametrize(params, system));
  std::mt19937_64 rng(5);
  std::vector<double> energies;
  for (int t = 0; t < 200; ++t) {
    const Vec3 p = random_vec(rng, 2.0);
    const std::vector<double> x = {p.x(), p.y(), p.z()};
    energies.push_back(vmc::local_energy(ansatz, params, reparam, system, x));
  }
  const auto stats = vmc::energy_stats(energies);
  CHECK(stats.mean == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(stats.std * stats.std < 1e-20);
}

TEST_CASE("local energy: matches a fully finite-difference evaluation") {
  std::mt19937_64 rng(8);
  for (const char* name : {"h2", "lih"}) {
    CAPTURE(name);
    wf::Ansatz ansatz(wf::NetworkConfig::desk());
    const auto system = wf::System::build(molecule(name));
    const Eigen::VectorXd params = ansatz.initialize(11);
    const auto reparam = ansatz.reparametrize(params, system);
    auto logf = [&](const std::vector<double>& x) {
      return ansatz.log_psi(params, reparam, system, x).log_abs;
    };
    for (int t = 0; t < 4; ++t) {
      const auto x = random_electrons(system, rng);
      // Richardson extrapolation of central differences.
      auto fd = [&](double h) {
        double lap = 0.0, g2 = 0.0;
        const double f0 = logf(x);
        for (std::size_t k = 0; k < x.size(); ++k) {
          auto a = x, b = x;
          a[k] += h;
          b[k] -= h;
          const double fa = logf(a), fb = logf(b);
          lap += (fa - 2 * f0 + fb) / (h * h);
          g2 += std::pow((fa - fb) / (2 * h), 2);
        }
        return -0.5 * (lap + g2);
      };
      const double kinetic = (4 * fd(1e-3) - fd(2e-3)) / 3;
      const double expected = kinetic + vmc::potential(system.molecule, x);
      CHECK(vmc::local_energy(ansatz, params, reparam, system, x) ==
            doctest::Approx(expected).epsilon(1e-4));
    }
  }
}

TEST_CASE("local energy: scaling the wave function leaves it unchanged") {
  wf::Ansatz ansatz(wf::NetworkConfig::desk());
  const auto system = wf::System::build(molecule("lih"));
  Eigen::VectorXd params = ansatz.initialize(2);
  const auto reparam = ansatz.reparametrize(params, system);
  std::mt19937_64 rng(4);
  const auto x = random_electrons(system, rng);
  const double e0 = vmc::local_energy(ansatz, params, reparam, system, x);
  const auto& w = ansatz.registry().entry("moon.det_weights");
  params.segment(w.offset, w.rows * w.cols) *= 7.5;
  CHECK(ansatz.log_psi(params, reparam, system, x).log_abs ==
        doctest::Approx(ansatz.log_psi(ansatz.initialize(2), reparam, system, x).log_abs +
                        std::log(7.5)));
  CHECK(vmc::local_energy(ansatz, params, reparam, system, x) == doctest::Approx(e0).epsilon(1e-12));
}

TEST_CASE("clip_energies: examples") {
  const std::vector<double> constant = {2.5, 2.5, 2.5};
  CHECK(vmc::clip_energies(constant) == constant);
  const std::vector<double> a = {0, 0, 0, 0, 100};
  CHECK(vmc::clip_energies(a) == a);
  const std::vector<double> b = {0, 0, 0, 0, 1000};
  CHECK(vmc::clip_energies(b) == b);
  const std::vector<double> c = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1000};
  const auto cc = vmc::clip_energies(c);
  CHECK(cc[9] == 500.0);
  CHECK(std::all_of(cc.begin(), cc.begin() + 9, [](double v) { return v == 0.0; }));
  CHECK_THROWS_AS(vmc::clip_energies(std::vector<double>{}), moonlet::Error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(vmc::clip_energies(std::vector<double>{nan, nan}), moonlet::Error);
}

TEST_CASE("clip_energies: order independent") {
  std::mt19937_64 rng(12);
  std::cauchy_distribution<double> heavy(-1.0, 0.3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> e(101);
    for (auto& v : e) v = heavy(rng);
    const auto once = vmc::clip_energies(e);
    std::vector<int> perm(e.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(e.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = e[perm[i]];
    const auto clipped = vmc::clip_energies(shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(clipped[i] == once[perm[i]]);
  }
}

TEST_CASE("clip_energies: a second pass only tightens the band") {
  // The band is built from the mean absolute deviation, which shrinks once an
  // outlier is clipped, so repeated clipping is not a fixed point.
  const std::vector<double> c = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1000};
  const auto once = vmc::clip_energies(c);
  const auto twice = vmc::clip_energies(once);
  CHECK(once[9] == 500.0);
  CHECK(twice[9] == 250.0);
  std::mt19937_64 rng(13);
  std::cauchy_distribution<double> heavy(-1.0, 0.3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> e(101);
    for (auto& v : e) v = heavy(rng);
    const auto a = vmc::clip_energies(e);
    const auto b = vmc::clip_energies(a);
    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
    for (double v : b) {
      CHECK(v >= *lo);
      CHECK(v <= *hi);
    }
    // Values strictly inside the first band's interior stay put.
    const double m = vmc::median(e);
    for (std::size_t i = 0; i < e.size(); ++i)
      if (std::abs(e[i] - m) < 1e-3) CHECK(b[i] == e[i]);
  }
}

TEST_CASE("energy gradient: centered estimator") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const Eigen::MatrixXd j = Eigen::MatrixXd::NullaryExpr(40, 6, [&] { return n(rng); });
  const std::vector<double> constant(40, -1.25);
  CHECK(vmc::energy_gradient(j, constant).norm() < 1e-14);

  std::vector<double> e(40);
  for (auto& v : e) v = -1.0 + 0.1 * n(rng);
  e[17] = 250.0;
  const double raw = vmc::energy_gradient(j, e).norm();
  const double clipped = vmc::energy_gradient(j, vmc::clip_energies(e)).norm();
  CHECK(clipped < raw);
}

TEST_CASE("energy gradient: analytic harmonic-oscillator toy") {
  // psi = exp(-theta x^2 / 2) for H = -1/2 d^2 + x^2 / 2:
  // E(theta) = theta / 4 + 1 / (4 theta), E_L = theta / 2 + x^2 (1 - theta^2) / 2.
  const double theta = 0.5;
  auto energy = [](double t) { return t / 4 + 1 / (4 * t); };
  const double h = 1e-5;
  const double exact = (energy(theta + h) - energy(theta - h)) / (2 * h);
  const int n = 100000;
  const double sigma = std::sqrt(1.0 / (2 * theta));
  auto estimate = [&](const std::vector<double>& xs) {
    Eigen::MatrixXd jac(n, 1);
    std::vector<double> el(n);
    for (int k = 0; k < n; ++k) {
      jac(k, 0) = -xs[k] * xs[k] / 2;
      el[k] = theta / 2 + xs[k] * xs[k] * (1 - theta * theta) / 2;
    }
    // The estimator omits the factor 2 of d<E>/dtheta for real wave functions.
    return 2 * vmc::energy_gradient(jac, el)[0];
  };

  SUBCASE("stratified samples match the derivative to 1e-3") {
    boost::math::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> xs(n);
    for (int k = 0; k < n; ++k) xs[k] = boost::math::quantile(normal, (k + 0.5) / n);
    CHECK(estimate(xs) == doctest::Approx(exact).epsilon(1e-3));
  }
  SUBCASE("random samples are unbiased within 3 standard errors") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> batch_estimates;
    for (int batch = 0; batch < 20; ++batch) {
      std::vector<double> xs(n);
      for (auto& x : xs) x = normal(rng);
      batch_estimates.push_back(estimate(xs));
    }
    const auto stats = vmc::energy_stats(batch_estimates);
    CHECK(std::abs(stats.mean - exact) < 3 * stats.stderr_);
  }
}

TEST_CASE("gradient rescaling and learning rate") {
  CHECK(vmc::rescale_factor(2.0) == 0.5);
  CHECK(vmc::rescale_factor(0.5) == 1.0);
  CHECK(vmc::rescale_factor(1.0) == 1.0);
  CHECK(vmc::rescale_factor(0.0) == 1.0);
  const std::vector<Eigen::VectorXd> g = {Eigen::VectorXd::Constant(3, 4.0),
                                          Eigen::VectorXd::Constant(3, 2.0)};
  const std::vector<double> s = {2.0, 0.5};
  CHECK(vmc::rescale_gradients(g, s).isApprox(Eigen::VectorXd::Constant(3, 2.0)));
  CHECK(vmc::learning_rate(0) == 0.1);
  CHECK(vmc::learning_rate(100) == 0.05);
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  CHECK(vmc::clip_norm(x).norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(vmc::clip_norm(x).isApprox(x / 5.0));
  CHECK(vmc::clip_norm(x / 10.0) == x / 10.0);
}

TEST_CASE("natural direction: matches a dense damped solve") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  const Eigen::MatrixXd r = Eigen::MatrixXd::NullaryExpr(12, 30, [&] { return n(rng); });
  const Eigen::VectorXd c = Eigen::VectorXd::NullaryExpr(12, [&] { return n(rng); });
  const double damping = 1e-3;
  const Eigen::VectorXd g = r.transpose() * c;
  const Eigen::MatrixXd a = r.transpose() * r + damping * Eigen::MatrixXd::Identity(30, 30);
  const Eigen::VectorXd exact = a.ldlt().solve(g);
  const auto nd = vmc::natural_direction(r, c, damping, 100, 1e-14);
  CHECK_FALSE(nd.fallback);
  CHECK(nd.gradient.isApprox(g, 1e-13));
  CHECK((nd.x - exact).norm() / exact.norm() < 1e-8);
}

TEST_CASE("natural direction: vanishing Fisher matrix gives gradient over damping") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  const Eigen::MatrixXd r = 1e-6 * Eigen::MatrixXd::NullaryExpr(8, 20, [&] { return n(rng); });
  const Eigen::VectorXd c = 1e3 * Eigen::VectorXd::NullaryExpr(8, [&] { return n(rng); });
  const double damping = 1e-4;
  const auto nd = vmc::natural_direction(r, c, damping, 100);
  const Eigen::VectorXd expected = nd.gradient / damping;
  CHECK((nd.x - expected).norm() / expected.norm() < 1e-6);
  REQUIRE(nd.x.norm() > 1.0);
  CHECK(vmc::clip_norm(nd.x).norm() == doctest::Approx(1.0));
}

TEST_CASE("natural direction: non-finite input falls back to the gradient") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(3, 4);
  r(1, 2) = std::numeric_limits<double>::quiet_NaN();
  const auto nd = vmc::natural_direction(r, Eigen::VectorXd::Ones(3), 1e-4, 10);
  CHECK(nd.fallback);
}

TEST_CASE("lamb: frozen entries stay fixed and steps follow the gradient sign") {
  moonlet::ad::ParamRegistry reg;
  reg.add("a", 2, 3, moonlet::ad::InitSpec::normal(1.0));
  reg.add("b", 1, 4, moonlet::ad::InitSpec::constant(0.0));
  reg.freeze("b");
  const Eigen::VectorXd p = reg.initialize(1);
  const Eigen::VectorXd g = Eigen::VectorXd::Ones(p.size());
  vmc::Lamb lamb(reg, 1e-2);
  const Eigen::VectorXd q = lamb.step(p, g);
  const auto& b = reg.entry("b");
  CHECK(q.segment(b.offset, 4) == p.segment(b.offset, 4));
  const auto& a = reg.entry("a");
  const Eigen::VectorXd delta = q.segment(a.offset, 6) - p.segment(a.offset, 6);
  CHECK((delta.array() < 0).all());
  // The trust ratio makes the step 1e-2 of the entry's norm.
  CHECK(delta.norm() == doctest::Approx(1e-2 * p.segment(a.offset, 6).norm()).epsilon(1e-6));
}

TEST_CASE("sampler: rejects moves into zero-density regions") {
  vmc::WalkerSet w = vmc::init_walkers(1, 200, 4);
  for (auto& x : w.positions) x = std::abs(x) + 0.1;
  const vmc::LogAmplitudeFn half = [](std::span<const double> x) {
    return x[0] < 0 ? -std::numeric_limits<double>::infinity() : -0.25 * x[0] * x[0];
  };
  vmc::refresh_log_abs(w, half);
  for (int it = 0; it < 20; ++it) vmc::mh_iteration(w, half, {});
  CHECK(std::all_of(w.positions.begin(), w.positions.end(), [](double x) { return x >= 0; }));
}

TEST_CASE("sampler: histogram of a Gaussian density passes a chi-square test") {
  // psi = exp(-x^2 / 4), so psi^2 is the standard normal density.
  const vmc::LogAmplitudeFn gauss = [](std::span<const double> x) { return -0.25 * x[0] * x[0]; };
  vmc::WalkerSet w = vmc::init_walkers(1, 20000, 21, 0.2);
  for (auto& x : w.positions) x = 3.0 + 0.1 * x;  // start far from equilibrium
  vmc::refresh_log_abs(w, gauss);
  double pmove = 0.0;
  for (int it = 0; it < 300; ++it) pmove = vmc::mh_iteration(w, gauss, {});
  CHECK(pmove >= 0.4);
  CHECK(pmove <= 0.6);

  const int bins = 20;
  boost::math::normal_distribution<double> normal;
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) edges.push_back(boost::math::quantile(normal, double(k) / bins));
  std::vector<int> counts(bins, 0);
  for (double x : w.positions)
    ++counts[std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()];
  const double expected = double(w.size()) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(
      boost::math::chi_squared_distribution<double>(bins - 1), chi2));
  CAPTURE(chi2);
  CHECK(p > 0.01);
}

TEST_CASE("sampler: acceptance settles near the target on a molecule") {
  wf::Ansatz ansatz(wf::NetworkConfig::desk());
  const auto system = wf::System::build(molecule("h2"));
  const Eigen::VectorXd params = ansatz.initialize(1);
  const auto reparam = ansatz.reparametrize(params, system);
  const vmc::LogAmplitudeFn fn = [&](std::span<const double> x) {
    return ansatz.log_psi(params, reparam, system, x).log_abs;
  };
  vmc::WalkerSet w = vmc::init_walkers(system, 64, 3, 0.05);
  vmc::refresh_log_abs(w, fn);
  std::vector<double> late;
  for (int it = 0; it < 200; ++it) {
    const double p = vmc::mh_iteration(w, fn, {});
    if (it >= 150) late.push_back(p);
  }
  const double mean = vmc::energy_stats(late).mean;
  CHECK(mean >= 0.4);
  CHECK(mean <= 0.6);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  vmc::parallel_for(1000, [&](int i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(vmc::parallel_for(10, [](int i) {
                    if (i == 7) throw moonlet::NumericalError("seven");
                  }),
                  moonlet::NumericalError);
}

namespace {

vmc::TrainConfig small_config() {
  vmc::TrainConfig c;
  c.walkers = 16;
  c.burn_in = 40;
  c.mcmc_steps = 10;
  c.seed = 5;
  return c;
}

std::vector<vmc::MoleculeInput> inputs(std::initializer_list<const char*> names, bool with_hf = false) {
  std::vector<vmc::MoleculeInput> out;
  for (const char* n : names) {
    vmc::MoleculeInput in{n, molecule(n), std::nullopt};
    if (with_hf) in.hf = moonlet::testing::hf(n);
    out.push_back(std::move(in));
  }
  return out;
}

std::string trace(vmc::Trainer& t, int steps) {
  std::ostringstream s;
  vmc::write_trace_header(s);
  for (int k = 0; k < steps; ++k)
    for (const auto& row : t.step()) vmc::write_trace_row(s, row);
  return s.str();
}

}  // namespace

TEST_CASE("trainer: identical seeds replay identical traces") {
  vmc::Trainer a(wf::NetworkConfig::desk(), small_config(), inputs({"h2"}));
  vmc::Trainer b(wf::NetworkConfig::desk(), small_config(), inputs({"h2"}));
  const std::string ta = trace(a, 3), tb = trace(b, 3);
  CHECK(ta == tb);
  CHECK(a.params() == b.params());
  CHECK(ta.rfind("step,molecule,energy,std,pmove,grad_norm,lr\n", 0) == 0);
}

TEST_CASE("trainer: joint batch is split evenly and every molecule is traced") {
  vmc::Trainer t(wf::NetworkConfig::desk(), small_config(), inputs({"h2", "h2_stretched"}));
  CHECK(t.walkers(0).size() == 8);
  CHECK(t.walkers(1).size() == 8);
  const auto rows = t.step();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].molecule == "h2");
  CHECK(rows[1].molecule == "h2_stretched");
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.energy));
    CHECK(r.std >= 0.0);
    CHECK(r.lr == 0.1);
  }
  auto odd = small_config();
  odd.walkers = 15;
  CHECK_THROWS_AS(vmc::Trainer(wf::NetworkConfig::desk(), odd, inputs({"h2", "h2_stretched"})),
                  moonlet::ConfigError);
}

TEST_CASE("trainer: checkpoints resume the exact trajectory") {
  const auto dir = std::filesystem::temp_directory_path() / "moonlet_ckpt_test";
  std::filesystem::remove_all(dir);
  vmc::Trainer a(wf::NetworkConfig::desk(), small_config(), inputs({"h2"}));
  trace(a, 2);
  a.save_checkpoint(dir / "ckpt");
  CHECK(std::filesystem::file_size(dir / "ckpt.params.bin") == 8u * a.ansatz().n_params());
  const std::string next_a = trace(a, 2);

  auto other_seed = small_config();
  other_seed.seed = 77;
  vmc::Trainer b(wf::NetworkConfig::desk(), other_seed, inputs({"h2"}));
  b.load_checkpoint(dir / "ckpt");
  CHECK(b.step_count() == 2);
  CHECK(trace(b, 2) == next_a);

  vmc::Trainer c(wf::NetworkConfig::desk(), small_config(), inputs({"lih"}));
  CHECK_THROWS_AS(c.load_checkpoint(dir / "ckpt"), moonlet::ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trainer: aborts after three non-finite steps") {
  vmc::Trainer t(wf::NetworkConfig::desk(), small_config(), inputs({"h"}));
  t.step();
  Eigen::VectorXd broken = t.params();
  broken.setConstant(std::numeric_limits<double>::quiet_NaN());
  t.set_params(broken);
  t.step();
  t.step();
  CHECK_THROWS_AS(t.step(), moonlet::NumericalError);
}

TEST_CASE("trainer: invalid settings are rejected") {
  auto c = small_config();
  c.mcmc_steps = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("mcmc_steps"), moonlet::ConfigError);
  c = small_config();
  c.target_pmove = 1.5;
  CHECK_THROWS_AS(c.validate(), moonlet::ConfigError);
}

TEST_CASE("pretraining: matching loss and regularizer weight") {
  wf::Ansatz ansatz(wf::NetworkConfig::desk());
  const auto system = wf::System::build(molecule("h2"));
  const Eigen::VectorXd params = ansatz.initialize(4);
  const auto reparam = ansatz.reparametrize(params, system);
  std::mt19937_64 rng(1);
  std::vector<std::vector<double>> walkers;
  std::vector<Eigen::MatrixXd> own, zero;
  for (int w = 0; w < 6; ++w) {
    walkers.push_back(random_electrons(system, rng));
    const auto blocks = ansatz.orbital_matrices(params, reparam, system, walkers.back());
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(2, 1);
    target(0, 0) = blocks[0].first(0, 0);
    target(1, 0) = blocks[0].second(0, 0);
    own.push_back(target);
    zero.push_back(Eigen::MatrixXd::Zero(2, 1));
  }
  const auto exact = ansatz.pretrain_gradient(params, system, walkers, own, 0.0);
  CHECK(exact.matching < 1e-28);
  CHECK(exact.gradient.norm() < 1e-12);
  const auto plain = ansatz.pretrain_gradient(params, system, walkers, zero, 0.0);
  CHECK(plain.loss == plain.matching);
  const auto reg = ansatz.pretrain_gradient(params, system, walkers, zero, 0.5);
  CHECK(reg.loss == doctest::Approx(reg.matching + 0.5 * reg.regularizer));
  CHECK(reg.regularizer > 0.0);
}

TEST_CASE("pretraining: loss decreases on H2") {
  auto c = small_config();
  c.walkers = 32;
  c.pretrain_lr = 1e-3;
  vmc::Trainer t(wf::NetworkConfig::desk(), c, inputs({"h2"}, true));
  std::vector<double> losses;
  for (int k = 0; k < 100; ++k) losses.push_back(t.pretrain_step().loss);
  const double head = vmc::energy_stats(std::span(losses).first(10)).mean;
  const double tail = vmc::energy_stats(std::span(losses).last(10)).mean;
  CAPTURE(head);
  CAPTURE(tail);
  CHECK(tail < head);
  CHECK(losses.back() < losses.front());

  vmc::Trainer missing(wf::NetworkConfig::desk(), c, inputs({"h2"}));
  CHECK_THROWS_WITH_AS(missing.pretrain_step(), doctest::Contains("h2"), moonlet::ConfigError);
}

TEST_CASE("evaluate: finite estimate with an error bar") {
  wf::Ansatz ansatz(wf::NetworkConfig::desk());
  const auto system = wf::System::build(molecule("h"));
  const Eigen::VectorXd params = ansatz.initialize(3);
  vmc::EvaluateOptions o;
  o.walkers = 32;
  o.iterations = 5;
  o.burn_in = 40;
  const auto ev = vmc::evaluate(ansatz, params, system, o);
  CHECK(std::isfinite(ev.energy));
  CHECK(ev.stderr_ > 0.0);
  CHECK(ev.samples == 160);
  CHECK(ev.energy > -0.5 - 5 * ev.stderr_);
}

TEST_CASE("trainer: hydrogen energy approaches the exact value from above") {
  vmc::TrainConfig c = small_config();
  c.walkers = 128;
  c.burn_in = 200;
  vmc::Trainer t(wf::NetworkConfig::desk(), c, inputs({"h"}));
  for (int k = 0; k < 150; ++k) t.step();
  vmc::EvaluateOptions o;
  o.walkers = 128;
  o.iterations = 50;
  o.mcmc_steps = 20;
  o.burn_in = 200;
  o.seed = 9;
  const auto ev = vmc::evaluate(t.ansatz(), t.params(), t.system(0), o);
  CAPTURE(ev.energy);
  CAPTURE(ev.stderr_);
  CHECK(ev.energy >= -0.5 - 3 * ev.stderr_);
  CHECK(ev.energy < -0.49);
}
