#include "diva/functional.hpp"

#include "diva/errors.hpp"
#include "internal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace diva {
namespace detail {

bool interaction_vanishes(const ManyBodyModel& model) {
  if (const auto* lu = std::get_if<LocalU>(&model.interaction)) return lu->u == 0.0;
  const auto& data = std::get<FullTensor>(model.interaction).data();
  return std::all_of(data.begin(), data.end(), [](double v) { return v == 0.0; });
}

}  // namespace detail

namespace {

// J[P]_mn = sum_lk (mn|lk) P_lk
Matrix coulomb_matrix(const FullTensor& eri, const Matrix& p) {
  const int n = eri.dim();
  Matrix j = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) acc += eri(a, b, c, d) * p(c, d);
      j(a, b) = j(b, a) = acc;
    }
  return j;
}

// K[Q]_mn = sum_lk (ml|kn) Q_lk
Matrix exchange_matrix(const FullTensor& eri, const Matrix& q) {
  const int n = eri.dim();
  Matrix k = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) acc += eri(a, c, d, b) * q(c, d);
      k(a, b) = k(b, a) = acc;
    }
  return k;
}

Matrix sqrt_block(const SpectralDecomposition& sd) {
  const Vector root = sd.occupations.cwiseMax(0.0).cwiseSqrt();
  Matrix q = sd.orbitals * root.asDiagonal() * sd.orbitals.transpose();
  return 0.5 * (q + q.transpose());
}

void check_shape(const DensityMatrix& gamma, const ManyBodyModel& model) {
  if (gamma.n_spatial() != model.n_spatial) throw ShapeError("density matrix does not match model dimension");
}

// Hartree and exchange-type interaction with exchange amplitudes Q per spin.
EnergyReport pair_energy(const DensityMatrix& gamma, const ManyBodyModel& model, const std::array<Matrix, 2>& q) {
  EnergyReport r;
  r.one_body = one_body_energy(gamma, model);
  r.core = model.core_energy;
  const Matrix p = gamma.block(0) + gamma.block(1);
  if (const auto* lu = std::get_if<LocalU>(&model.interaction)) {
    const int n = model.n_spatial;
    r.double_occupation.resize(n);
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = 0.5 * p(i, i) * p(i, i) - 0.5 * (q[0](i, i) * q[0](i, i) + q[1](i, i) * q[1](i, i));
      r.double_occupation[i] = d;
      w += d;
    }
    r.interaction = lu->u * w;
  } else {
    const auto& eri = std::get<FullTensor>(model.interaction);
    const double eh = 0.5 * p.cwiseProduct(coulomb_matrix(eri, p)).sum();
    double ex = 0.0;
    for (int s = 0; s < kSpinBlocks; ++s) ex -= 0.5 * q[s].cwiseProduct(exchange_matrix(eri, q[s])).sum();
    r.interaction = eh + ex;
  }
  r.total = r.one_body + r.interaction + r.core;
  return r;
}

void check_representable(const DensityMatrix& gamma) {
  const double d = pseudo_distance(gamma);
  if (d < -detail::kRepresentabilityTol) {
    std::ostringstream os;
    os << "density matrix outside the representable set (d = " << d << ")";
    throw RepresentabilityError(os.str());
  }
}

}  // namespace

const char* to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::HartreeFock: return "hf";
    case FunctionalKind::Mueller: return "mueller";
    case FunctionalKind::ToewsPastor: return "tp";
  }
  return "?";
}

FunctionalKind parse_functional_kind(const std::string& name) {
  if (name == "hf" || name == "hartree-fock") return FunctionalKind::HartreeFock;
  if (name == "mueller" || name == "muller") return FunctionalKind::Mueller;
  if (name == "tp" || name == "tows-pastor" || name == "toews-pastor") return FunctionalKind::ToewsPastor;
  throw std::invalid_argument("unknown functional: " + name);
}

void FunctionalSpec::validate(const ManyBodyModel& model) const {
  if (!(fd_step >= 1e-8 && fd_step <= 1e-2)) throw std::invalid_argument("fd_step must lie in [1e-8, 1e-2]");
  if (kind == FunctionalKind::ToewsPastor && !model.local())
    throw ModelError("the Toews-Pastor functional needs an on-site interaction");
  if (!model.local() && model.n_electrons[0] != model.n_electrons[1])
    throw ModelError("open-shell molecular input (MS2 != 0) is not supported by the restricted functionals");
}

double one_body_energy(const DensityMatrix& gamma, const ManyBodyModel& model) {
  check_shape(gamma, model);
  return model.one_body.cwiseProduct(gamma.block(0) + gamma.block(1)).sum();
}

double mueller_pair(double eta_i, double eta_j) {
  return std::sqrt(std::clamp(eta_i, 0.0, 1.0) * std::clamp(eta_j, 0.0, 1.0));
}

EnergyReport hartree_fock_energy(const DensityMatrix& gamma, const ManyBodyModel& model) {
  check_shape(gamma, model);
  return pair_energy(gamma, model, {gamma.block(0), gamma.block(1)});
}

EnergyReport mueller_energy(const DensityMatrix& gamma, const ManyBodyModel& model) {
  check_shape(gamma, model);
  check_representable(gamma);
  Matrix q0 = sqrt_block(gamma.spectrum(0));
  Matrix q1 = gamma.spin_symmetric() ? q0 : sqrt_block(gamma.spectrum(1));
  return pair_energy(gamma, model, {std::move(q0), std::move(q1)});
}

EnergyReport evaluate(const DensityMatrix& gamma, const ManyBodyModel& model, const FunctionalSpec& spec) {
  spec.validate(model);
  switch (spec.kind) {
    case FunctionalKind::HartreeFock: return hartree_fock_energy(gamma, model);
    case FunctionalKind::Mueller: return mueller_energy(gamma, model);
    case FunctionalKind::ToewsPastor: return tows_pastor_energy(gamma, model);
  }
  throw std::logic_error("unreachable");
}

BlockPair numeric_gradient(const std::function<double(const BlockPair&)>& energy, const BlockPair& at, double h,
                           bool spin_symmetric) {
  const Eigen::Index n = at[0].rows();
  BlockPair grad{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  BlockPair work = at;
  const int blocks = spin_symmetric ? 1 : kSpinBlocks;
  for (int s = 0; s < blocks; ++s) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) {
        const double step = i == j ? h : 0.5 * h;
        auto shift = [&](double sign) {
          work[s](i, j) = at[s](i, j) + sign * step;
          work[s](j, i) = at[s](j, i) + sign * step;
        };
        shift(1.0);
        const double ep = energy(work);
        shift(-1.0);
        const double em = energy(work);
        work[s](i, j) = at[s](i, j);
        work[s](j, i) = at[s](j, i);
        grad[s](i, j) = grad[s](j, i) = (ep - em) / (2.0 * h);
      }
  }
  if (spin_symmetric) grad[1] = grad[0];
  return grad;
}

BlockPair gradient(const DensityMatrix& gamma, const ManyBodyModel& model, const FunctionalSpec& spec) {
  spec.validate(model);
  check_shape(gamma, model);
  if (detail::interaction_vanishes(model)) return {model.one_body, model.one_body};

  const double h = spec.fd_step;
  if (spec.kind == FunctionalKind::Mueller) {
    for (int s = 0; s < kSpinBlocks; ++s) {
      const Vector& eta = gamma.spectrum(s).occupations;
      const bool near_zero = eta.minCoeff() < h;
      const bool near_one = eta.maxCoeff() > 1.0 - h;
      if (near_zero || (!spec.analytic_gradient && near_one)) {
        std::ostringstream os;
        os << "occupation within " << h << " of the boundary (eta range [" << eta.minCoeff() << ", "
           << eta.maxCoeff() << "])";
        throw BoundaryGradientError(os.str());
      }
    }
  }

  if (!spec.analytic_gradient) {
    auto energy = [&](const BlockPair& b) { return evaluate(DensityMatrix::from_blocks(b), model, spec).total; };
    return numeric_gradient(energy, gamma.blocks(), h, gamma.spin_symmetric());
  }

  if (spec.kind == FunctionalKind::ToewsPastor) return detail::tows_pastor_gradient(gamma, model);

  const Matrix p = gamma.block(0) + gamma.block(1);
  const bool mueller = spec.kind == FunctionalKind::Mueller;
  BlockPair grad;
  const auto* lu = std::get_if<LocalU>(&model.interaction);
  const FullTensor* eri = lu ? nullptr : &std::get<FullTensor>(model.interaction);
  const Matrix hartree = lu ? Matrix(lu->u * p.diagonal().asDiagonal()) : coulomb_matrix(*eri, p);
  for (int s = 0; s < kSpinBlocks; ++s) {
    if (s == 1 && gamma.spin_symmetric()) {
      grad[1] = grad[0];
      break;
    }
    Matrix g = model.one_body + hartree;
    if (mueller) {
      const SpectralDecomposition& sd = gamma.spectrum(s);
      const Matrix q = sqrt_block(sd);
      const Matrix k = lu ? Matrix(lu->u * q.diagonal().asDiagonal()) : exchange_matrix(*eri, q);
      const Vector root = sd.occupations.cwiseMax(0.0).cwiseSqrt();
      Matrix kt = sd.orbitals.transpose() * k * sd.orbitals;
      for (Eigen::Index a = 0; a < kt.rows(); ++a)
        for (Eigen::Index b = 0; b < kt.cols(); ++b) kt(a, b) /= root(a) + root(b);
      g -= sd.orbitals * kt * sd.orbitals.transpose();
    } else {
      const Matrix& gs = gamma.block(s);
      g -= lu ? Matrix(lu->u * gs.diagonal().asDiagonal()) : exchange_matrix(*eri, gs);
    }
    grad[s] = 0.5 * (g + g.transpose());
  }
  return grad;
}

std::pair<Matrix, double> gradient_postprocess(const Matrix& grad, DiagonalMode mode) {
  if (grad.rows() != grad.cols() || grad.rows() == 0) throw ShapeError("gradient must be square");
  const double mu = grad.diagonal().mean();
  Matrix out = grad;
  if (mode == DiagonalMode::ConserveN)
    out.diagonal().array() -= mu;
  else
    out.diagonal().setZero();
  return {std::move(out), mu};
}

Objective make_objective(const ManyBodyModel& model, const FunctionalSpec& spec) {
  spec.validate(model);
  return {[model, spec](const DensityMatrix& g) { return evaluate(g, model, spec).total; },
          [model, spec](const DensityMatrix& g) { return gradient(g, model, spec); }};
}

}  // namespace diva
