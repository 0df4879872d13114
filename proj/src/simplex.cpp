// Multi-parameter interpolation: energy minimization over the simplex of
// weights attached to an anchor matrix and a growing list of boundary points.

#include "diva/errors.hpp"
#include "diva/log.hpp"
#include "diva/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diva {
namespace {

constexpr int kMaxSpgIters = 500;
constexpr int kPatternSearchLimit = 12;
constexpr double kStallTol = 1e-14;

// Euclidean projection onto {z >= 0, sum z = 1}.
Vector project_simplex(const Vector& v) {
  Vector s = v;
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    cum += s(k);
    const double t = (cum - 1.0) / double(k + 1);
    if (s(k) - t > 0.0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0);
}

class SimplexProblem {
 public:
  SimplexProblem(const DensityMatrix& anchor, const std::vector<DensityMatrix>& members, const Objective& obj)
      : obj_(obj) {
    vertices_.push_back(&anchor);
    for (const auto& m : members) vertices_.push_back(&m);
  }

  Eigen::Index size() const { return Eigen::Index(vertices_.size()); }

  DensityMatrix combine(const Vector& z) const {
    Matrix up = Matrix::Zero(vertices_[0]->n_spatial(), vertices_[0]->n_spatial());
    Matrix down = up;
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      if (z(r) == 0.0) continue;
      up += z(r) * vertices_[r]->block(0);
      down += z(r) * vertices_[r]->block(1);
    }
    return DensityMatrix(std::move(up), std::move(down));
  }

  double energy(const Vector& z) const {
    ++evaluations;
    return obj_.energy(combine(z));
  }

  // Partials dE/dz_r up to a common shift, which the simplex projection ignores.
  Vector gradient(const Vector& z, double fz) const {
    const DensityMatrix g = combine(z);
    Vector out(size());
    try {
      const BlockPair grad = obj_.gradient(g);
      for (Eigen::Index r = 0; r < size(); ++r) out(r) = inner_product(grad, vertices_[r]->blocks());
      return out;
    } catch (const BoundaryGradientError&) {
    }
    constexpr double h = 1e-7;
    for (Eigen::Index r = 0; r < size(); ++r) {
      Vector zr = (1.0 - h) * z;
      zr(r) += h;
      out(r) = (energy(zr) - fz) / h;
    }
    return out;
  }

  mutable long evaluations = 0;

 private:
  const Objective& obj_;
  std::vector<const DensityMatrix*> vertices_;
};

// Spectral projected gradient with monotone Armijo backtracking.
void spg(const SimplexProblem& p, Vector& z, double& fz) {
  Vector g = p.gradient(z, fz);
  double alpha = 1.0;
  {
    const double pg = (project_simplex(z - g) - z).lpNorm<Eigen::Infinity>();
    if (pg > 0.0) alpha = 1.0 / std::max(pg, 1e-12);
  }
  for (int it = 0; it < kMaxSpgIters; ++it) {
    if ((project_simplex(z - g) - z).lpNorm<Eigen::Infinity>() < 1e-12) break;
    const Vector d = project_simplex(z - alpha * g) - z;
    const double slope = g.dot(d);
    if (!(slope < 0.0)) break;
    double lambda = 1.0, fn = fz;
    Vector zn = z;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      zn = project_simplex(z + lambda * d);
      fn = p.energy(zn);
      if (fn <= fz + 1e-4 * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
    const Vector gn = p.gradient(zn, fn);
    const Vector s = zn - z, y = gn - g;
    const double sy = s.dot(y);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
    const double gain = fz - fn;
    z = zn;
    fz = fn;
    g = gn;
    if (gain < 1e-16 * std::max(1.0, std::abs(fz))) break;
  }
}

// Compass search along weight transfers z_i -> z_j.
void pattern_search(const SimplexProblem& p, Vector& z, double& fz) {
  const Eigen::Index k = z.size();
  for (double step = 0.25; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
          if (i == j || z(i) <= 0.0) continue;
          Vector zn = z;
          const double t = std::min(step, z(i));
          zn(i) -= t;
          zn(j) += t;
          const double fn = p.energy(zn);
          if (fn < fz - kStallTol) {
            z = zn;
            fz = fn;
            improved = true;
          }
        }
    }
  }
}

}  // namespace

MultiResult multi_minimize(const DensityMatrix& anchor, const std::vector<DensityMatrix>& members,
                           const Objective& objective, const std::vector<double>& warm) {
  if (members.empty()) throw std::invalid_argument("multi_minimize needs at least one boundary member");
  for (const auto& m : members)
    if (m.n_spatial() != anchor.n_spatial()) throw ShapeError("multi_minimize: members differ in dimension");
  const SimplexProblem p(anchor, members, objective);
  Vector z = Vector::Zero(p.size());
  if (warm.empty()) {
    z(0) = 1.0;
  } else {
    for (std::size_t r = 0; r < warm.size() && Eigen::Index(r) < z.size(); ++r) z(r) = std::max(0.0, warm[r]);
    z = project_simplex(z);
  }
  const double f0 = p.energy(z);
  double fz = f0;
  spg(p, z, fz);
  if (!(fz <= f0 - kStallTol) && p.size() <= kPatternSearchLimit) pattern_search(p, z, fz);

  MultiResult out{std::vector<double>(z.data(), z.data() + z.size()), p.combine(z), fz, false};
  out.stalled = !(fz <= f0 - kStallTol);
  if (out.stalled) log::debug("OptimizerStall: no simplex point lowers the energy");
  return out;
}

}  // namespace diva
