// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "moonlet/ad/cg.hpp"
#include "moonlet/ad/lap.hpp"
#include "moonlet/ad/math.hpp"
#include "moonlet/ad/params.hpp"
#include "moonlet/ad/tape.hpp"
#include "moonlet/errors.hpp"

namespace ad = moonlet::ad;

namespace {

// A smooth scalar test function of three variables touching every primitive.
template <class T>
T probe(const T& x, const T& y, const T& z) {
  using std::exp;
  using std::log1p;
  using std::sqrt;
  using std::tanh;
  const T r = sqrt(x * x + y * y + z * z + 0.3);
  return exp(-0.5 * r) * tanh(x - 2.0 * y) + log1p(r * r) / (1.0 + z * z) +
         ad::silu(y * z) - ad::softplus(x * y) + ad::sigmoid(z - x);
}

double probe_d(const std::array<double, 3>& p) { return probe<double>(p[0], p[1], p[2]); }

}  // namespace

TEST_CASE("lap: gradient and laplacian match central differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 3> p = {n(rng), n(rng), n(rng)};
    using L = ad::Lap<3>;
    const L out = probe<L>(L::variable(p[0], 0), L::variable(p[1], 1), L::variable(p[2], 2));
    CHECK(out.v == doctest::Approx(probe_d(p)).epsilon(1e-14));
    const double h = 1e-4;
    double lap = 0.0;
    for (int d = 0; d < 3; ++d) {
      auto a = p, b = p;
      a[d] += h;
      b[d] -= h;
      const double fa = probe_d(a), fb = probe_d(b), f0 = probe_d(p);
      CHECK(out.g[d] == doctest::Approx((fa - fb) / (2 * h)).epsilon(1e-7));
      lap += (fa - 2 * f0 + fb) / (h * h);
    }
    CHECK(out.l == doctest::Approx(lap).epsilon(1e-5));
  }
}

TEST_CASE("var: reverse gradient equals forward gradient") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 3> p = {n(rng), n(rng), n(rng)};
    ad::Tape tape;
    ad::TapeScope scope(tape);
    const ad::Var x = ad::Var::leaf(p[0]), y = ad::Var::leaf(p[1]), z = ad::Var::leaf(p[2]);
    const ad::Var out = probe<ad::Var>(x, y, z);
    std::vector<double> adj(tape.size(), 0.0);
    adj[out.id] = 1.0;
    tape.backward(adj);
    using L = ad::Lap<3>;
    const L fwd = probe<L>(L::variable(p[0], 0), L::variable(p[1], 1), L::variable(p[2], 2));
    CHECK(out.v == doctest::Approx(fwd.v).epsilon(1e-14));
    CHECK(adj[x.id] == doctest::Approx(fwd.g[0]).epsilon(1e-12));
    CHECK(adj[y.id] == doctest::Approx(fwd.g[1]).epsilon(1e-12));
    CHECK(adj[z.id] == doctest::Approx(fwd.g[2]).epsilon(1e-12));
  }
}

TEST_CASE("var: constants do not create tape nodes") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var a(2.0), b(3.0);
  const ad::Var c = ad::exp(a * b + 1.0);
  CHECK(c.is_constant());
  CHECK(tape.size() == 0);
}

TEST_CASE("linear_combination matches explicit sum") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  std::vector<ad::Var> x = {ad::Var::leaf(1.0), ad::Var(2.0), ad::Var::leaf(-0.5)};
  std::vector<double> c = {0.5, 3.0, -2.0};
  const ad::Var s = ad::linear_combination(x, c, 0.25);
  CHECK(s.v == doctest::Approx(0.5 + 6.0 + 1.0 + 0.25));
  std::vector<double> adj(tape.size(), 0.0);
  adj[s.id] = 1.0;
  tape.backward(adj);
  CHECK(adj[x[0].id] == doctest::Approx(0.5));
  CHECK(adj[x[2].id] == doctest::Approx(-2.0));
}

TEST_CASE("affine overloads agree across scalar types") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  const int in = 4, out = 3;
  std::vector<double> w(in * out), b(out), x(in);
  for (auto& v : w) v = n(rng);
  for (auto& v : b) v = n(rng);
  for (auto& v : x) v = n(rng);
  std::vector<double> y(out);
  ad::affine(std::span<const double>(x), ad::MatView<double>{w.data(), in, out}, b.data(),
             std::span<double>(y));
  for (int j = 0; j < out; ++j) {
    double ref = b[j];
    for (int i = 0; i < in; ++i) ref += x[i] * w[i * out + j];
    CHECK(y[j] == doctest::Approx(ref).epsilon(1e-14));
  }
  using L = ad::Lap<4>;
  std::vector<L> xl(in);
  for (int i = 0; i < in; ++i) xl[i] = L::variable(x[i], i);
  std::vector<L> yl(out);
  ad::affine(std::span<const L>(xl), ad::MatView<double>{w.data(), in, out}, b.data(),
             std::span<L>(yl));
  for (int j = 0; j < out; ++j) {
    CHECK(yl[j].v == doctest::Approx(y[j]).epsilon(1e-14));
    for (int i = 0; i < in; ++i) CHECK(yl[j].g[i] == doctest::Approx(w[i * out + j]));
  }
  ad::Tape tape;
  ad::TapeScope scope(tape);
  std::vector<ad::Var> xv(in), wv(w.size()), bv(out), yv(out);
  for (int i = 0; i < in; ++i) xv[i] = ad::Var::leaf(x[i]);
  for (std::size_t i = 0; i < w.size(); ++i) wv[i] = ad::Var::leaf(w[i]);
  for (int i = 0; i < out; ++i) bv[i] = ad::Var::leaf(b[i]);
  ad::affine(std::span<const ad::Var>(xv), ad::MatView<ad::Var>{wv.data(), in, out}, bv.data(),
             std::span<ad::Var>(yv));
  std::vector<double> adj(tape.size(), 0.0);
  adj[yv[1].id] = 1.0;
  tape.backward(adj);
  CHECK(yv[1].v == doctest::Approx(y[1]).epsilon(1e-14));
  for (int i = 0; i < in; ++i) {
    CHECK(adj[xv[i].id] == doctest::Approx(w[i * out + 1]));
    CHECK(adj[wv[i * out + 1].id] == doctest::Approx(x[i]));
    CHECK(adj[wv[i * out + 0].id] == 0.0);
  }
  CHECK(adj[bv[1].id] == 1.0);
}

TEST_CASE("slogdet matches Eigen determinant and its derivatives") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int size = 1; size <= 6; ++size) {
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(size, size, [&] { return n(rng); });
    std::vector<double> flat(size * size);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) flat[r * size + c] = a(r, c);
    const double det = a.determinant();
    const auto s = ad::slogdet<double>(flat, size);
    CHECK(s.sign == (det < 0 ? -1.0 : 1.0));
    CHECK(s.log_abs == doctest::Approx(std::log(std::abs(det))).epsilon(1e-12));

    // d log|det A| / dA = A^{-T}
    const Eigen::MatrixXd inv_t = a.inverse().transpose();
    ad::Tape tape;
    ad::TapeScope scope(tape);
    std::vector<ad::Var> av(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) av[i] = ad::Var::leaf(flat[i]);
    const auto sv = ad::slogdet<ad::Var>(av, size);
    CHECK(sv.log_abs.v == doctest::Approx(s.log_abs).epsilon(1e-12));
    std::vector<double> adj(tape.size(), 0.0);
    adj[sv.log_abs.id] = 1.0;
    tape.backward(adj);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        CHECK(adj[av[r * size + c].id] == doctest::Approx(inv_t(r, c)).epsilon(1e-9));
  }
}

TEST_CASE("slogdet of a forward-mode matrix carries the log-det derivatives") {
  // A(t) = A0 + t B: d/dt log|det| = tr(A^{-1} B), d2/dt2 = -tr((A^{-1}B)^2).
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n;
  const int size = 4;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(size, size, [&] { return n(rng); });
  Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(size, size, [&] { return n(rng); });
  using L = ad::Lap<1>;
  std::vector<L> m(size * size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      m[r * size + c] = L(a(r, c));
      m[r * size + c].g[0] = b(r, c);
    }
  const auto s = ad::slogdet<L>(m, size);
  const Eigen::MatrixXd x = a.inverse() * b;
  CHECK(s.log_abs.g[0] == doctest::Approx(x.trace()).epsilon(1e-10));
  CHECK(s.log_abs.l == doctest::Approx(-(x * x).trace()).epsilon(1e-10));
}

TEST_CASE("cg: matches a dense solve and error decreases in the energy norm") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  const int dim = 30;
  Eigen::MatrixXd j = Eigen::MatrixXd::NullaryExpr(12, dim, [&] { return n(rng); });
  const Eigen::MatrixXd f = j.transpose() * j / 12.0;
  const Eigen::VectorXd g = Eigen::VectorXd::NullaryExpr(dim, [&] { return n(rng); });
  const double damping = 1e-2;
  const Eigen::MatrixXd a = f + damping * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::VectorXd exact = a.ldlt().solve(g);
  const auto result =
      ad::cg_solve([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return f * v; }, g,
                   damping, 500, 1e-12);
  CHECK(result.converged);
  CHECK((result.x - exact).norm() / exact.norm() < 1e-8);

  double previous = std::numeric_limits<double>::infinity();
  for (int steps = 0; steps <= 25; ++steps) {
    const auto partial =
        ad::cg_solve([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return f * v; }, g,
                     damping, steps, 0.0);
    const Eigen::VectorXd e = partial.x - exact;
    const double energy = e.dot(a * e);
    // Past convergence the error sits at the rounding floor and may wobble.
    if (previous > 1e-20) CHECK(energy <= previous * (1 + 1e-12));
    previous = energy;
  }
}

TEST_CASE("cg: custom inner product reproduces the Euclidean iterates") {
  // Solving K y = J g in coefficient space with <a,b> = a^T K b reproduces parameter CG.
  std::mt19937_64 rng(19);
  std::normal_distribution<double> n;
  const int rows = 8, dim = 20;
  const Eigen::MatrixXd j = Eigen::MatrixXd::NullaryExpr(rows, dim, [&] { return n(rng); });
  const Eigen::VectorXd c = Eigen::VectorXd::NullaryExpr(rows, [&] { return n(rng); });
  const Eigen::VectorXd g = j.transpose() * c;
  const double lambda = 0.1;
  const Eigen::MatrixXd k = j * j.transpose();
  for (int steps = 1; steps <= 6; ++steps) {
    const auto param = ad::cg_solve(
        [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return j.transpose() * (j * v) / rows; },
        g, lambda, steps, 0.0);
    const auto coef = ad::conjugate_gradient(
        [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return k * y / rows + lambda * y; }, c,
        [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(k * b); }, steps,
        0.0);
    CHECK((j.transpose() * coef.x - param.x).norm() < 1e-9 * param.x.norm());
  }
}

TEST_CASE("cg: non-finite input raises") {
  Eigen::VectorXd g(2);
  g << 1.0, std::nan("");
  CHECK_THROWS_AS(ad::cg_solve([](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v; }, g,
                               0.1, 5),
                  moonlet::NumericalError);
}

TEST_CASE("param registry: deterministic init, packing and freezing") {
  ad::ParamRegistry reg;
  reg.add("a.w", 3, 4, ad::InitSpec::normal(0.5));
  reg.add("a.b", 1, 4, ad::InitSpec::constant(0.25));
  reg.add("c", 1, 3, ad::InitSpec::log_spaced(0.5, 8.0));
  reg.add("d", 2, 2, ad::InitSpec::per_column({1.0, -1.0}));
  CHECK(reg.size() == 12 + 4 + 3 + 4);
  CHECK_THROWS_AS(reg.add("c", 1, 1, ad::InitSpec::constant(0)), moonlet::ConfigError);

  const Eigen::VectorXd p = reg.initialize(42);
  CHECK(p == reg.initialize(42));
  CHECK(p != reg.initialize(43));
  const auto t = reg.unpack(p);
  CHECK(t.at("a.b").isConstant(0.25));
  CHECK(t.at("c")(0, 0) == doctest::Approx(0.5));
  CHECK(t.at("c")(0, 1) == doctest::Approx(2.0));
  CHECK(t.at("c")(0, 2) == doctest::Approx(8.0));
  CHECK(t.at("d")(1, 0) == 1.0);
  CHECK(t.at("d")(1, 1) == -1.0);
  CHECK(reg.pack(t) == p);

  // The stream of an entry does not depend on what else is registered.
  ad::ParamRegistry other;
  other.add("zzz", 5, 5, ad::InitSpec::normal(1.0));
  other.add("a.w", 3, 4, ad::InitSpec::normal(0.5));
  CHECK(other.unpack(other.initialize(42)).at("a.w") == t.at("a.w"));

  CHECK(reg.freeze("a.") == 2);
  const Eigen::VectorXd mask = reg.trainable_mask();
  CHECK(mask.head(16).sum() == 0.0);
  CHECK(mask.tail(7).sum() == 7.0);

  const Eigen::VectorXd grad = ad::param_gradient(
      [](std::span<const ad::Var> x) {
        ad::Var s(0.0);
        for (const auto& v : x) s += v * v;
        return s;
      },
      p, reg);
  CHECK(grad.head(16).isZero());
  CHECK((grad.tail(7) - 2.0 * p.tail(7)).norm() < 1e-14);
}

TEST_CASE("param_gradient names the offending parameter") {
  ad::ParamRegistry reg;
  reg.add("fine", 1, 2, ad::InitSpec::constant(1.0));
  reg.add("broken", 1, 1, ad::InitSpec::constant(0.0));
  const Eigen::VectorXd p = reg.initialize(0);
  try {
    ad::param_gradient([](std::span<const ad::Var> x) { return x[0] + ad::log(x[2]); }, p, reg);
    FAIL("expected NumericalError");
  } catch (const moonlet::NumericalError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
}
