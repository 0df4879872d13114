#include "diva/model.hpp"

#include "diva/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace diva {

void FullTensor::set_symmetric(int i, int j, int k, int l, double value) {
  for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}})
    for (auto [c, d] : {std::pair{k, l}, std::pair{l, k}}) {
      data_[index(a, b, c, d)] = value;
      data_[index(c, d, a, b)] = value;
    }
}

double ManyBodyModel::hubbard_u() const {
  if (const auto* lu = std::get_if<LocalU>(&interaction)) return lu->u;
  throw ModelError("model has no on-site Hubbard interaction");
}

void ManyBodyModel::validate() const {
  if (n_spatial <= 0) throw ShapeError("model needs at least one orbital");
  if (one_body.rows() != n_spatial || one_body.cols() != n_spatial) throw ShapeError("one-body matrix shape mismatch");
  if ((one_body - one_body.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw NotSymmetric("one-body matrix not symmetric");
  if (const auto* ft = std::get_if<FullTensor>(&interaction); ft && ft->dim() != n_spatial)
    throw ShapeError("two-body tensor dimension mismatch");
  for (int s = 0; s < kSpinBlocks; ++s)
    if (n_electrons[s] < 0 || n_electrons[s] > n_spatial) throw FillingError("electron count out of range");
}

int electrons_per_spin(const LatticeSpec& spec) {
  if (spec.filling < 0.0 || spec.filling > 2.0) throw FillingError("filling must lie in [0, 2]");
  const double per_spin = spec.filling * spec.n_sites / 2.0;
  const double rounded = std::round(per_spin);
  if (std::abs(per_spin - rounded) > 1e-9) {
    std::ostringstream os;
    os << "filling " << spec.filling << " on " << spec.n_sites << " sites gives " << per_spin
       << " electrons per spin";
    throw FillingError(os.str());
  }
  return static_cast<int>(rounded);
}

ManyBodyModel build_hubbard(const LatticeSpec& spec) {
  if (spec.n_sites < 2) throw ShapeError("Hubbard chain needs at least two sites");
  if (spec.coulomb < 0.0) throw std::invalid_argument("U must be nonnegative");
  const int L = spec.n_sites;
  const int ne = electrons_per_spin(spec);
  ManyBodyModel m;
  m.n_spatial = L;
  m.one_body = Matrix::Zero(L, L);
  for (int i = 0; i + 1 < L; ++i) {
    m.one_body(i, i + 1) -= spec.hopping;
    m.one_body(i + 1, i) -= spec.hopping;
  }
  // The two-site ring carries both bonds between the same pair of sites.
  if (spec.periodic) {
    m.one_body(0, L - 1) -= spec.hopping;
    m.one_body(L - 1, 0) -= spec.hopping;
  }
  m.interaction = LocalU{spec.coulomb};
  m.n_electrons = {ne, ne};
  m.lattice = spec;
  return m;
}

ManyBodyModel with_coulomb(const ManyBodyModel& model, double u) {
  if (!model.local()) throw ModelError("with_coulomb requires an on-site interaction");
  ManyBodyModel out = model;
  out.interaction = LocalU{u};
  if (out.lattice) out.lattice->coulomb = u;
  return out;
}

std::vector<BlochPoint> bloch_occupations(const DensityMatrix& gamma, const LatticeSpec& spec) {
  const int L = spec.n_sites;
  if (!spec.periodic) throw NotUniform("Bloch occupations need a periodic chain");
  if (gamma.n_spatial() != L) throw ShapeError("density matrix does not match lattice size");
  constexpr double tol = 1e-6;
  for (int s = 0; s < kSpinBlocks; ++s) {
    const Matrix& g = gamma.block(s);
    double dev = 0.0;
    for (int i = 1; i < L; ++i)
      for (int d = 0; d < L; ++d) dev = std::max(dev, std::abs(g(i, (i + d) % L) - g(0, d)));
    if (dev > tol) {
      std::ostringstream os;
      os << "density matrix is not circulant (max row deviation " << dev << ")";
      throw NotUniform(os.str());
    }
  }
  std::vector<BlochPoint> out(L);
  for (int m = 1; m <= L; ++m) {
    const double k = 2.0 * std::numbers::pi * m / L - std::numbers::pi;
    BlochPoint& p = out[m - 1];
    p.k = k;
    for (int s = 0; s < kSpinBlocks; ++s) {
      double eta = 0.0;
      for (int d = 0; d < L; ++d) eta += std::cos(k * d) * gamma.block(s)(0, d);
      p.eta[s] = eta;
    }
  }
  return out;
}

}  // namespace diva
