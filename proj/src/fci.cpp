#include "diva/errors.hpp"
#include "diva/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace diva {
namespace {

using Bits = std::uint32_t;

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    if (r > kMax / (n - k + i)) return kMax;
    r = r * (n - k + i) / i;
  }
  return r;
}

// All n-bit strings with k set bits, ascending.
std::vector<Bits> strings(int n, int k) {
  std::vector<Bits> out;
  if (k == 0) {
    out.push_back(0);
    return out;
  }
  Bits v = (Bits(1) << k) - 1;
  const Bits limit = Bits(1) << n;
  while (v < limit) {
    out.push_back(v);
    const Bits t = v | (v - 1);
    v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
  }
  return out;
}

// a^dagger_p a_q acting on string `s` (q occupied, p empty or p == q).
struct Excitation {
  std::int32_t target;
  std::int8_t p, q;
  std::int8_t sign;
};

struct SpinSpace {
  std::vector<Bits> strs;
  std::vector<std::vector<Excitation>> exc;  // per source string
};

SpinSpace build_space(int n, int k) {
  SpinSpace sp;
  sp.strs = strings(n, k);
  std::unordered_map<Bits, std::int32_t> index;
  for (std::size_t i = 0; i < sp.strs.size(); ++i) index.emplace(sp.strs[i], std::int32_t(i));
  sp.exc.resize(sp.strs.size());
  for (std::size_t a = 0; a < sp.strs.size(); ++a) {
    const Bits s = sp.strs[a];
    for (int q = 0; q < n; ++q) {
      if (!(s >> q & 1u)) continue;
      const Bits s1 = s & ~(Bits(1) << q);
      const int sign_q = std::popcount(s1 & ((Bits(1) << q) - 1)) & 1;
      for (int p = 0; p < n; ++p) {
        if (s1 >> p & 1u) continue;
        const Bits s2 = s1 | (Bits(1) << p);
        const int sign_p = std::popcount(s1 & ((Bits(1) << p) - 1)) & 1;
        sp.exc[a].push_back({index.at(s2), std::int8_t(p), std::int8_t(q), std::int8_t((sign_p ^ sign_q) ? -1 : 1)});
      }
    }
  }
  return sp;
}

class Hamiltonian {
 public:
  explicit Hamiltonian(const ManyBodyModel& m)
      : model_(m), up_(build_space(m.n_spatial, m.n_electrons[0])), dn_(build_space(m.n_spatial, m.n_electrons[1])) {
    nu_ = std::int64_t(up_.strs.size());
    nd_ = std::int64_t(dn_.strs.size());
    if (const auto* lu = std::get_if<LocalU>(&m.interaction)) {
      diag_.resize(nu_ * nd_);
      for (std::int64_t a = 0; a < nu_; ++a)
        for (std::int64_t b = 0; b < nd_; ++b)
          diag_[a * nd_ + b] = lu->u * std::popcount(up_.strs[a] & dn_.strs[b]);
    } else {
      const auto& eri = std::get<FullTensor>(m.interaction);
      const int n = m.n_spatial;
      hmod_ = m.one_body;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          for (int r = 0; r < n; ++r) hmod_(p, q) -= 0.5 * eri(p, r, r, q);
    }
  }

  std::int64_t dim() const { return nu_ * nd_; }

  Vector apply(const Vector& x) const {
    Vector y = Vector::Zero(dim());
    if (model_.local()) {
      y = diag_.cwiseProduct(x);
      add_one_body(model_.one_body, x, y);
      return y;
    }
    const int n = model_.n_spatial;
    add_one_body(hmod_, x, y);
    const auto& eri = std::get<FullTensor>(model_.interaction);
    // D_rs = E_rs x, G_pq = 1/2 sum_rs (pq|rs) D_rs, y += sum_pq E_pq G_pq
    std::vector<Vector> d(n * n, Vector::Zero(dim()));
    apply_all_excitations(x, d);
    std::vector<Vector> g(n * n, Vector::Zero(dim()));
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) {
            const double v = eri(p, q, r, s);
            if (v != 0.0) g[p * n + q] += 0.5 * v * d[r * n + s];
          }
    for (std::int64_t a = 0; a < nu_; ++a)
      for (const auto& e : up_.exc[a])
        for (std::int64_t b = 0; b < nd_; ++b)
          y(e.target * nd_ + b) += e.sign * g[e.p * n + e.q](a * nd_ + b);
    for (std::int64_t b = 0; b < nd_; ++b)
      for (const auto& e : dn_.exc[b])
        for (std::int64_t a = 0; a < nu_; ++a)
          y(a * nd_ + e.target) += e.sign * g[e.p * n + e.q](a * nd_ + b);
    return y;
  }

  BlockPair one_rdm(const Vector& x) const {
    const int n = model_.n_spatial;
    BlockPair out{Matrix::Zero(n, n), Matrix::Zero(n, n)};
    for (std::int64_t a = 0; a < nu_; ++a)
      for (const auto& e : up_.exc[a])
        for (std::int64_t b = 0; b < nd_; ++b) out[0](e.p, e.q) += e.sign * x(e.target * nd_ + b) * x(a * nd_ + b);
    for (std::int64_t b = 0; b < nd_; ++b)
      for (const auto& e : dn_.exc[b])
        for (std::int64_t a = 0; a < nu_; ++a) out[1](e.p, e.q) += e.sign * x(a * nd_ + e.target) * x(a * nd_ + b);
    for (auto& m : out) m = 0.5 * (m + m.transpose());
    return out;
  }

  std::vector<double> double_occ(const Vector& x) const {
    const int n = model_.n_spatial;
    std::vector<double> d(n, 0.0);
    for (std::int64_t a = 0; a < nu_; ++a)
      for (std::int64_t b = 0; b < nd_; ++b) {
        const Bits both = up_.strs[a] & dn_.strs[b];
        if (!both) continue;
        const double w = x(a * nd_ + b) * x(a * nd_ + b);
        for (int i = 0; i < n; ++i)
          if (both >> i & 1u) d[i] += w;
      }
    return d;
  }

 private:
  void add_one_body(const Matrix& h, const Vector& x, Vector& y) const {
    for (std::int64_t a = 0; a < nu_; ++a)
      for (const auto& e : up_.exc[a]) {
        const double t = h(e.p, e.q);
        if (t == 0.0) continue;
        y.segment(e.target * nd_, nd_) += (e.sign * t) * x.segment(a * nd_, nd_);
      }
    for (std::int64_t b = 0; b < nd_; ++b)
      for (const auto& e : dn_.exc[b]) {
        const double t = h(e.p, e.q);
        if (t == 0.0) continue;
        const double f = e.sign * t;
        for (std::int64_t a = 0; a < nu_; ++a) y(a * nd_ + e.target) += f * x(a * nd_ + b);
      }
  }

  void apply_all_excitations(const Vector& x, std::vector<Vector>& d) const {
    const int n = model_.n_spatial;
    for (std::int64_t a = 0; a < nu_; ++a)
      for (const auto& e : up_.exc[a])
        d[e.p * n + e.q].segment(e.target * nd_, nd_) += e.sign * x.segment(a * nd_, nd_);
    for (std::int64_t b = 0; b < nd_; ++b)
      for (const auto& e : dn_.exc[b])
        for (std::int64_t a = 0; a < nu_; ++a) d[e.p * n + e.q](a * nd_ + e.target) += e.sign * x(a * nd_ + b);
  }

  const ManyBodyModel& model_;
  SpinSpace up_, dn_;
  std::int64_t nu_ = 0, nd_ = 0;
  Vector diag_;
  Matrix hmod_;
};

// Lanczos with full reorthogonalization and explicit restarts.
std::pair<double, Vector> lowest_eigenpair(const Hamiltonian& h, unsigned seed) {
  const std::int64_t dim = h.dim();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(dim);
  for (std::int64_t i = 0; i < dim; ++i) v(i) = dist(rng);
  v.normalize();

  const int kmax = int(std::min<std::int64_t>(dim, 120));
  double energy = 0.0;
  for (int restart = 0; restart < 100; ++restart) {
    std::vector<Vector> basis;
    std::vector<double> alpha, beta;
    basis.push_back(v);
    for (int j = 0; j < kmax; ++j) {
      Vector w = h.apply(basis[j]);
      alpha.push_back(basis[j].dot(w));
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) w -= b.dot(w) * b;
      const double bnorm = w.norm();
      if (j + 1 == kmax || bnorm < 1e-12) break;
      beta.push_back(bnorm);
      basis.push_back(w / bnorm);
    }
    const int m = int(alpha.size());
    Matrix tri = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    const SpectralDecomposition es = symmetric_eigen(tri);
    energy = es.occupations(0);
    Vector ritz = Vector::Zero(dim);
    for (int i = 0; i < m; ++i) ritz += es.orbitals(i, 0) * basis[i];
    ritz.normalize();
    const double resid = (h.apply(ritz) - energy * ritz).norm();
    v = ritz;
    if (resid < 1e-9 || m == dim) break;
  }
  return {energy, v};
}

}  // namespace

std::int64_t fci_dimension(const ManyBodyModel& model) {
  const std::int64_t a = binomial(model.n_spatial, model.n_electrons[0]);
  const std::int64_t b = binomial(model.n_spatial, model.n_electrons[1]);
  std::int64_t dim = 0;
  if (__builtin_mul_overflow(a, b, &dim)) return std::numeric_limits<std::int64_t>::max();
  return dim;
}

FciResult fci_ground_state(const ManyBodyModel& model, unsigned seed) {
  model.validate();
  const std::int64_t dim = fci_dimension(model);
  if (model.n_spatial > 30 || dim > kFciDimensionCap) {
    std::ostringstream os;
    os << "many-body dimension " << dim << " exceeds the cap " << kFciDimensionCap;
    throw DimensionError(os.str());
  }
  if (!model.local() && model.n_spatial > kFciMaxTensorOrbitals)
    throw DimensionError("tensor-interaction FCI is limited to 8 orbitals");
  const Hamiltonian h(model);
  auto [energy, vec] = lowest_eigenpair(h, seed);
  const BlockPair rdm = h.one_rdm(vec);
  return FciResult{energy + model.core_energy, DensityMatrix(rdm[0], rdm[1]),
                   model.local() ? h.double_occ(vec) : std::vector<double>{}, dim};
}

double tight_binding_energy(const LatticeSpec& spec) {
  const int ne = electrons_per_spin(spec);
  std::vector<double> levels;
  if (spec.periodic) {
    for (int m = 0; m < spec.n_sites; ++m)
      levels.push_back(-2.0 * spec.hopping * std::cos(2.0 * std::numbers::pi * m / spec.n_sites));
    std::sort(levels.begin(), levels.end());
  } else {
    const ManyBodyModel model = build_hubbard(spec);
    const Vector ev = symmetric_eigen(model.one_body, false).occupations;
    levels.assign(ev.data(), ev.data() + ev.size());
  }
  double sum = 0.0;
  for (int i = 0; i < ne; ++i) sum += levels[i];
  return 2.0 * sum;
}

}  // namespace diva
