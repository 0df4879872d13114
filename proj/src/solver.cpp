#include "diva/solver.hpp"

#include "diva/errors.hpp"
#include "diva/log.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace diva {
namespace {

constexpr double kActiveTol = 1e-9;
constexpr double kReleaseTol = 1e-6;
constexpr int kMaxGrowthSteps = 200;
constexpr int kMaxBisections = 200;

BlockPair masked_direction(const DensityMatrix& gamma) {
  BlockPair d = gamma.blocks();
  for (auto& m : d) m.diagonal().setZero();
  return d;
}

// Gradient at (1 - delta) gamma + delta / 2, the first shrink that clears the
// boundary; used when the masked direction makes no progress.
bool probe_gradient(const Objective& objective, const DensityMatrix& gamma, BlockPair& out) {
  for (double delta : {1e-6, 1e-4, 1e-2}) {
    BlockPair b = gamma.blocks();
    for (auto& m : b) {
      m *= 1.0 - delta;
      m.diagonal().array() += 0.5 * delta;
    }
    try {
      out = objective.gradient(DensityMatrix::from_blocks(b));
      return true;
    } catch (const BoundaryGradientError&) {
    }
  }
  return false;
}

// Applies the diagonal constraint per spin; returns the mean raw diagonal.
double constrain(BlockPair& g, DiagonalMode mode) {
  double mu = 0.0;
  for (auto& m : g) {
    auto [out, mu_s] = gradient_postprocess(m, mode);
    m = std::move(out);
    mu += mu_s / kSpinBlocks;
  }
  return mu;
}

void apply_diagonal_constraint(Matrix& m, DiagonalMode mode) {
  if (mode == DiagonalMode::ConserveN)
    m.diagonal().array() -= m.diagonal().mean();
  else
    m.diagonal().setZero();
}

// Removes the components of `d` that would push occupations pinned at 0 or 1
// out of [0, 1], keeping the diagonal constraint (alternating projections).
// Pinned subspaces are handled as a whole so degenerate natural orbitals are
// treated independently of the eigensolver's basis choice; a pinned direction
// is released only when `d` moves it inward by more than kReleaseTol * |d|.
Matrix face_project_block(const SpectralDecomposition& sd, const Matrix& d, DiagonalMode mode) {
  const Matrix& u = sd.orbitals;
  const Vector& eta = sd.occupations;
  const Eigen::Index n = eta.size();
  std::vector<Eigen::Index> low, high;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eta(k) <= kActiveTol)
      low.push_back(k);
    else if (eta(k) >= 1.0 - kActiveTol)
      high.push_back(k);
  }
  if (low.empty() && high.empty()) return d;
  const Matrix dt = u.transpose() * d * u;
  const double release = kReleaseTol * std::max(d.norm(), 1e-300);
  Matrix basis = u;
  std::vector<Eigen::Index> active;
  auto pin = [&](const std::vector<Eigen::Index>& idx, double sign) {
    if (idx.empty()) return;
    const Eigen::Index m = Eigen::Index(idx.size());
    Matrix sub(m, m), cols(n, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      cols.col(a) = u.col(idx[a]);
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = dt(idx[a], idx[b]);
    }
    const SpectralDecomposition es = symmetric_eigen(sub);
    const Matrix rotated = cols * es.orbitals;
    for (Eigen::Index a = 0; a < m; ++a) {
      basis.col(idx[a]) = rotated.col(a);
      if (sign * es.occupations(a) >= -release) active.push_back(idx[a]);
    }
  };
  pin(low, 1.0);
  pin(high, -1.0);
  if (active.empty()) return d;
  Matrix x = d;
  const double scale = std::max(d.norm(), 1e-300);
  for (int it = 0; it < 200; ++it) {
    Matrix xt = basis.transpose() * x * basis;
    for (Eigen::Index k : active) {
      xt.row(k).setZero();
      xt.col(k).setZero();
    }
    Matrix y = basis * xt * basis.transpose();
    y = 0.5 * (y + y.transpose());
    apply_diagonal_constraint(y, mode);
    const double change = (y - x).norm();
    x = std::move(y);
    if (change <= 1e-13 * scale) break;
  }
  return x;
}

BlockPair face_project(const DensityMatrix& gamma, const BlockPair& d, DiagonalMode mode) {
  BlockPair out;
  out[0] = face_project_block(gamma.spectrum(0), d[0], mode);
  if (gamma.spin_symmetric() && d[0] == d[1])
    out[1] = out[0];
  else
    out[1] = face_project_block(gamma.spectrum(1), d[1], mode);
  return out;
}

DensityMatrix interpolate(const DensityMatrix& a, const DensityMatrix& b, double z) {
  if (z == 0.0) return a;
  if (z == 1.0) return b;
  return DensityMatrix((1.0 - z) * a.block(0) + z * b.block(0), (1.0 - z) * a.block(1) + z * b.block(1));
}

double diagonal_spread(const BlockPair& raw) {
  double spread = 0.0;
  for (const auto& m : raw) {
    const double mu = m.diagonal().mean();
    spread = std::max(spread, (m.diagonal().array() - mu).abs().maxCoeff());
  }
  return spread;
}

}  // namespace

const char* to_string(DivaMode mode) { return mode == DivaMode::Mono ? "mono" : "multi"; }
const char* to_string(DirectionKind kind) { return kind == DirectionKind::SteepestDescent ? "sd" : "cg"; }
const char* to_string(DiagonalMode mode) { return mode == DiagonalMode::ConserveN ? "conserve-n" : "fix-diagonal"; }

void DivaConfig::validate() const {
  if (!(energy_tol > 0.0) || !(rdm_tol > 0.0) || !(bracket_tol > 0.0))
    throw std::invalid_argument("solver tolerances must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(theta_growth > 1.0)) throw std::invalid_argument("theta_growth must exceed 1");
}

Aufbau aufbau_fill(const Matrix& h, int n_occupied) {
  const int n = static_cast<int>(h.rows());
  if (n_occupied < 0 || n_occupied > n) throw FillingError("occupied orbital count out of range");
  const SpectralDecomposition es = symmetric_eigen(h);
  Aufbau out;
  out.energies = es.occupations;
  const Matrix c = es.orbitals.leftCols(n_occupied);
  out.projector = c * c.transpose();
  out.projector = 0.5 * (out.projector + out.projector.transpose());
  out.homo = n_occupied > 0 ? out.energies(n_occupied - 1) : -std::numeric_limits<double>::infinity();
  if (n_occupied > 0 && n_occupied < n) {
    const double gap = out.energies(n_occupied) - out.energies(n_occupied - 1);
    out.degenerate = gap <= 1e-10 * std::max(1.0, out.energies.cwiseAbs().maxCoeff());
  }
  return out;
}

DensityMatrix initial_guess(const ManyBodyModel& model) {
  model.validate();
  BlockPair blocks;
  for (int s = 0; s < kSpinBlocks; ++s) {
    if (s == 1 && model.n_electrons[1] == model.n_electrons[0]) {
      blocks[1] = blocks[0];
      break;
    }
    const Aufbau a = aufbau_fill(model.one_body, model.n_electrons[s]);
    if (a.degenerate) log::warn("DegeneracyWarning: frontier level of the initial guess is degenerate");
    blocks[s] = a.projector;
  }
  return DensityMatrix(blocks[0], blocks[1],
                       std::array<double, 2>{double(model.n_electrons[0]), double(model.n_electrons[1])});
}

BoundaryPoint boundary_search(const DensityMatrix& gamma, const BlockPair& direction, const DivaConfig& cfg) {
  const double norm = frobenius_norm(direction);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DirectionError("boundary search needs a nonzero direction");
  auto step = [&](double theta) {
    BlockPair b{gamma.block(0) - theta * direction[0], gamma.block(1) - theta * direction[1]};
    return b;
  };
  double lo = 0.0, hi = 0.1 / norm;
  int growth = 0;
  while (pseudo_distance(step(hi)) >= 0.0) {
    lo = hi;
    hi *= cfg.theta_growth;
    if (++growth > kMaxGrowthSteps)
      throw DirectionError("ray never leaves the representable set; direction has no effect");
  }
  for (int it = 0; it < kMaxBisections; ++it) {
    if ((hi - lo) * norm <= cfg.bracket_tol) break;
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (pseudo_distance(step(mid)) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const BlockPair b = step(lo);
  return {DensityMatrix(b[0], b[1]), lo};
}

LineResult line_minimize(const DensityMatrix& a, const DensityMatrix& b,
                         const std::function<double(const DensityMatrix&)>& energy, std::optional<double> energy_a,
                         std::optional<double> energy_b) {
  std::map<double, double> cache;
  auto f = [&](double z) {
    auto it = cache.find(z);
    if (it != cache.end()) return it->second;
    const double e = energy(interpolate(a, b, z));
    cache.emplace(z, e);
    return e;
  };
  if (energy_a) cache.emplace(0.0, *energy_a);
  if (energy_b) cache.emplace(1.0, *energy_b);
  constexpr double h = 1e-6;
  auto slope = [&](double z) {
    const double zl = std::max(0.0, z - h), zr = std::min(1.0, z + h);
    return (f(zr) - f(zl)) / (zr - zl);
  };

  const double ea = f(0.0), eb = f(1.0);
  const double d0 = slope(0.0), d1 = slope(1.0);
  if (d0 < 0.0 && d1 > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    const double zb = 0.5 * (lo + hi);
    if (f(zb) > std::min(ea, eb)) {
      // noisy derivative: derivative-free refinement
      const auto [zg, eg] = boost::math::tools::brent_find_minima(f, 0.0, 1.0, 40);
      (void)eg;
      f(zg);
    }
  } else if (d0 < 0.0) {
    const auto [zg, eg] = boost::math::tools::brent_find_minima(f, 0.0, 1.0, 40);
    (void)eg;
    f(zg);
  }
  double zbest = 0.0, ebest = ea;
  for (const auto& [z, e] : cache)
    if (e < ebest) {
      ebest = e;
      zbest = z;
    }
  return {zbest, interpolate(a, b, zbest), ebest};
}

DivaResult diva_minimize(const Objective& objective, const DivaConfig& cfg, const DensityMatrix& start) {
  cfg.validate();
  DivaResult res{start, {}, {}, false, 0, "max_iterations", {}, 0.0};
  DensityMatrix gamma = start;
  double energy = objective.energy(gamma);
  res.trace.records.push_back({0, energy, 0.0, 0.0, 0.0, 0, {1.0}});

  std::vector<DensityMatrix> members;
  std::vector<double> weights{1.0};
  BlockPair prev_grad, prev_dir;
  bool have_prev = false;
  bool masked_stalled = false;

  for (int s = 1; s <= cfg.max_iters; ++s) {
    res.iterations = s;
    bool real = s > 1;
    BlockPair raw;
    if (real) {
      try {
        raw = objective.gradient(gamma);
      } catch (const BoundaryGradientError& e) {
        if (masked_stalled && probe_gradient(objective, gamma, raw)) {
          log::debug(std::string("interior probe direction: ") + e.what());
        } else {
          log::debug(std::string("masked direction: ") + e.what());
          real = false;
        }
      }
    }
    if (!real) raw = masked_direction(gamma);
    if (!raw[0].allFinite() || !raw[1].allFinite()) throw DirectionError("energy gradient has non-finite entries");
    BlockPair g = raw;
    const double mu = constrain(g, cfg.diagonal_mode);

    BlockPair dir = g;
    if (cfg.direction == DirectionKind::ConjugateGradient && real && have_prev) {
      const double denom = inner_product(prev_grad, prev_grad);
      double beta = 0.0;
      if (denom > 0.0) {
        BlockPair diff{g[0] - prev_grad[0], g[1] - prev_grad[1]};
        beta = std::max(0.0, inner_product(g, diff) / denom);
      }
      BlockPair cand{g[0] + beta * prev_dir[0], g[1] + beta * prev_dir[1]};
      if (inner_product(cand, g) > 0.0) dir = std::move(cand);
    }
    dir = face_project(gamma, dir, cfg.diagonal_mode);
    if (real && inner_product(dir, g) <= 0.0) dir = face_project(gamma, g, cfg.diagonal_mode);
    if (real) {
      prev_grad = g;
      prev_dir = dir;
      have_prev = true;
    }

    const double dnorm = frobenius_norm(dir);
    if (!(dnorm > 1e-14 * std::max(1.0, frobenius_norm(g)))) {
      res.trace.records.push_back({s, energy, 0.0, 0.0, mu, int(members.size()), weights});
      if (real) {
        res.converged = true;
        res.status = "converged";
        break;
      }
      masked_stalled = true;
      continue;
    }

    const BoundaryPoint bp = boundary_search(gamma, dir, cfg);
    DensityMatrix next = gamma;
    double next_energy = energy;
    if (cfg.mode == DivaMode::Mono) {
      const LineResult lr = line_minimize(gamma, bp.gamma, objective.energy, energy);
      next = lr.gamma;
      next_energy = lr.energy;
      weights = {1.0 - lr.z, lr.z};
      members.assign(1, bp.gamma);
    } else {
      members.push_back(bp.gamma);
      const MultiResult mr = multi_minimize(start, members, objective, weights);
      weights = mr.z;
      if (mr.energy <= energy) {
        next = mr.gamma;
        next_energy = mr.energy;
      }
    }
    const double de = energy - next_energy;
    const double dg = frobenius_distance(next, gamma);
    masked_stalled = !real && dg == 0.0;
    gamma = std::move(next);
    energy = next_energy;
    res.trace.records.push_back({s, energy, de, dg, mu, int(members.size()), weights});
    if (log::level() >= log::Level::Debug) {
      std::ostringstream os;
      os << "iter " << s << " E=" << energy << " dE=" << de << " dgamma=" << dg << " theta=" << bp.theta;
      log::debug(os.str());
    }
    if (real && de < cfg.energy_tol && dg < cfg.rdm_tol) {
      res.converged = true;
      res.status = "converged";
      break;
    }
  }

  res.gamma = gamma;
  try {
    BlockPair raw = objective.gradient(gamma);
    res.diagonal_spread = diagonal_spread(raw);
    res.report.mu = constrain(raw, cfg.diagonal_mode);
    res.gradient = std::move(raw);
  } catch (const BoundaryGradientError&) {
    res.diagonal_spread = std::numeric_limits<double>::quiet_NaN();
    res.report.mu = res.trace.records.back().mu;
  }
  if (!res.converged) log::warn("MaxIterations: DIVA stopped before meeting both tolerances");
  return res;
}

DivaResult diva_run(const ManyBodyModel& model, const FunctionalSpec& spec, const DivaConfig& cfg,
                    const std::optional<DensityMatrix>& start) {
  model.validate();
  const Objective obj = make_objective(model, spec);
  const DensityMatrix gamma0 = start ? *start : initial_guess(model);
  if (gamma0.n_spatial() != model.n_spatial) throw ShapeError("start matrix does not match model dimension");
  DivaResult res = diva_minimize(obj, cfg, gamma0);
  const double mu = res.report.mu;
  res.report = evaluate(res.gamma, model, spec);
  res.report.mu = mu;
  return res;
}

}  // namespace diva
