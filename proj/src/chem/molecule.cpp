// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include "moonlet/chem/molecule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moonlet/errors.hpp"

namespace moonlet::chem {

namespace {

constexpr double kMinSeparation = 1e-6;

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Canonical order: charge descending, then position lexicographic. Summing in
// this order makes the frame independent of the input order bit for bit.
std::vector<Nucleus> canonical_order(const std::vector<Nucleus>& nuclei) {
  std::vector<Nucleus> sorted = nuclei;
  std::sort(sorted.begin(), sorted.end(), [](const Nucleus& a, const Nucleus& b) {
    if (a.charge != b.charge) return a.charge > b.charge;
    return lex_less(a.position, b.position);
  });
  return sorted;
}

}  // namespace

Molecule::Molecule(std::string name, std::vector<Nucleus> nuclei)
    : name_(std::move(name)), nuclei_(std::move(nuclei)) {
  if (nuclei_.empty()) throw ValidationError("molecule '" + name_ + "' has no nuclei");
  for (std::size_t i = 0; i < nuclei_.size(); ++i) {
    if (nuclei_[i].charge < 1)
      throw ValidationError("molecule '" + name_ + "': nucleus " + std::to_string(i) +
                            " has charge < 1");
    if (!nuclei_[i].position.allFinite())
      throw ValidationError("molecule '" + name_ + "': nucleus " + std::to_string(i) +
                            " has a non-finite position");
    for (std::size_t j = 0; j < i; ++j) {
      if ((nuclei_[i].position - nuclei_[j].position).norm() <= kMinSeparation)
        throw ValidationError("molecule '" + name_ + "': nuclei " + std::to_string(j) +
                              " and " + std::to_string(i) + " coincide");
    }
  }
}

int Molecule::total_charge() const {
  return std::accumulate(nuclei_.begin(), nuclei_.end(), 0,
                         [](int acc, const Nucleus& n) { return acc + n.charge; });
}

Molecule Molecule::transformed(const Mat3& rotation, const Vec3& shift) const {
  std::vector<Nucleus> moved = nuclei_;
  for (auto& n : moved) n.position = rotation * n.position + shift;
  return Molecule(name_, std::move(moved));
}

Molecule Molecule::permuted(std::span<const int> perm) const {
  std::vector<Nucleus> out;
  out.reserve(perm.size());
  for (int p : perm) out.push_back(nuclei_.at(p));
  return Molecule(name_, std::move(out));
}

ElectronLayout ElectronLayout::for_molecule(const Molecule& molecule) {
  ElectronLayout layout;
  layout.n_total = molecule.total_charge();
  layout.n_up = (layout.n_total + 1) / 2;
  layout.n_down = layout.n_total - layout.n_up;
  return layout;
}

Frame build_frame(const Molecule& molecule) {
  Frame frame;
  const std::vector<Nucleus> nuclei = canonical_order(molecule.nuclei());
  if (nuclei.size() == 1) {
    frame.origin = nuclei.front().position;
    return frame;
  }

  double total = 0.0;
  Vec3 origin = Vec3::Zero();
  for (const auto& n : nuclei) {
    origin += n.charge * n.position;
    total += n.charge;
  }
  origin /= total;

  Mat3 cov = Mat3::Zero();
  for (const auto& n : nuclei) {
    const Vec3 d = n.position - origin;
    cov += n.charge * d * d.transpose();
  }
  cov /= total;

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  // Descending eigenvalue order.
  Eigen::Vector3d values;
  Mat3 axes;
  for (int k = 0; k < 3; ++k) {
    values[k] = solver.eigenvalues()[2 - k];
    axes.col(k) = solver.eigenvectors().col(2 - k);
  }

  const double tol = 1e-8 * std::max(1.0, values[0]);
  for (int start = 0; start < 3;) {
    int stop = start + 1;
    while (stop < 3 && std::abs(values[stop - 1] - values[stop]) <= tol) ++stop;
    const int dim = stop - start;
    if (dim > 1) {
      // Degenerate subspace: basis from the projected global axes.
      const Eigen::MatrixXd basis = axes.block(0, start, 3, dim);
      const Mat3 projector = basis * basis.transpose();
      int accepted = 0;
      for (int g = 0; g < 3 && accepted < dim; ++g) {
        Vec3 candidate = projector.col(g);
        for (int a = 0; a < accepted; ++a) {
          const Vec3 prev = axes.col(start + a);
          candidate -= candidate.dot(prev) * prev;
        }
        if (candidate.norm() > 1e-6) {
          axes.col(start + accepted) = candidate.normalized();
          ++accepted;
        }
      }
    }
    start = stop;
  }

  // Reference nucleus for the fallback sign rule: highest charge, then the
  // lexicographically smallest position (the canonical order puts it first).
  const Vec3 reference = nuclei.front().position - origin;
  for (int k = 0; k < 2; ++k) {
    const Vec3 axis = axes.col(k);
    double third = 0.0;
    double scale = 0.0;
    for (const auto& n : nuclei) {
      const double p = axis.dot(n.position - origin);
      third += n.charge * p * p * p;
      scale += n.charge * std::abs(p * p * p);
    }
    double sign = 1.0;
    if (std::abs(third) > 1e-10 * std::max(scale, 1e-300)) {
      sign = third < 0.0 ? -1.0 : 1.0;
    } else if (axis.dot(reference) < -1e-12) {
      sign = -1.0;
    }
    axes.col(k) *= sign;
  }
  axes.col(2) = axes.col(0).cross(axes.col(1));

  frame.rotation = axes;
  frame.origin = origin;
  return frame;
}

std::vector<Vec3> to_frame(const Frame& frame, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(frame.to_local(p));
  return out;
}

std::vector<Vec3> from_frame(const Frame& frame, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(frame.to_global(p));
  return out;
}

}  // namespace moonlet::chem
