// Toews-Pastor on-site double occupation from an effective two-level system:
// site i coupled to the normalized orbital |phi_i> ~ sum_{j != i} gamma_ij |j>.
// Quantities are built from the spin-averaged 1-RDM.

#include "diva/errors.hpp"
#include "diva/functional.hpp"
#include "internal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace diva {
namespace {

constexpr double kTinyHybridization = 1e-14;
// Half-width of the window around M = 1 where the gradient averages the two
// one-sided derivatives.
constexpr double kKinkWindow = 1e-5;

enum class Side { Auto, Below, Above };

struct SiteArrays {
  Matrix avg;   // spin-averaged gamma
  Matrix v;     // avg with zeroed diagonal
  Matrix w;     // v * avg
  Vector g2;    // row norms of v
  Vector s;     // rowwise <v_i, avg v_i>
};

SiteArrays site_arrays(const DensityMatrix& gamma) {
  SiteArrays a;
  a.avg = 0.5 * (gamma.block(0) + gamma.block(1));
  a.v = a.avg;
  a.v.diagonal().setZero();
  a.w = a.v * a.avg;
  a.g2 = a.v.rowwise().squaredNorm();
  a.s = a.v.cwiseProduct(a.w).rowwise().sum();
  return a;
}

double effective_occupation(double n, double g2, double s) {
  if (g2 <= kTinyHybridization) return n;
  return std::clamp(s / g2, 0.0, 1.0);
}

TowsPastorSite site_state(double n_up, double n_down, double g2, double n_prime, Side side) {
  TowsPastorSite st;
  st.n_up = n_up;
  st.n_down = n_down;
  st.n = 0.5 * (n_up + n_down);
  st.g2 = g2;
  st.n_prime = n_prime;
  const double a = st.n, b = n_prime;
  st.M = a + b;
  const bool below = side == Side::Auto ? st.M <= 1.0 : side == Side::Below;
  st.m = below ? st.M : 2.0 - st.M;
  if (below) {
    st.g0_2 = a * b;
    st.ginf_2 = a <= b ? a * (b - a) : b * (a - b);
  } else {
    st.g0_2 = (1.0 - a) * (1.0 - b);
    st.ginf_2 = a > b ? (1.0 - a) * (a - b) : (1.0 - b) * (b - a);
  }
  return st;
}

double double_occ(const TowsPastorSite& st, bool below) {
  const double a = st.n, b = st.n_prime;
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(st.g2) || !std::isfinite(st.M) ||
      !std::isfinite(st.g0_2) || !std::isfinite(st.ginf_2) || st.g2 < -1e-12) {
    std::ostringstream os;
    os << "no branch applies to site data (n = " << a << ", n' = " << b << ", g2 = " << st.g2 << ")";
    throw CaseError(os.str());
  }
  double d;
  if (st.g2 > st.ginf_2) {
    // a - g2 / (m - 2 sqrt(g0^2 - g2)), rationalized to avoid cancellation.
    const double root = std::sqrt(std::max(0.0, st.g0_2 - st.g2));
    d = a - st.g2 * (st.m + 2.0 * root) / ((a - b) * (a - b) + 4.0 * st.g2);
  } else if (below) {
    d = a <= b ? 0.0 : 2.0 * a - st.M;
  } else {
    d = a > b ? 2.0 * a - 1.0 : st.M - 1.0;
  }
  const double cap = std::max(0.0, std::min(st.n_up, st.n_down));
  return std::clamp(d, 0.0, cap);
}

double site_value(double n_up, double n_down, double g2, double n_prime, Side side = Side::Auto) {
  const TowsPastorSite st = site_state(n_up, n_down, g2, n_prime, side);
  return double_occ(st, side == Side::Auto ? st.M <= 1.0 : side == Side::Below);
}

}  // namespace

TowsPastorSite tows_pastor_site(double n_up, double n_down, double g2, double n_prime) {
  return site_state(n_up, n_down, g2, n_prime, Side::Auto);
}

double tows_pastor_double_occ(const TowsPastorSite& st) { return double_occ(st, st.M <= 1.0); }

EnergyReport tows_pastor_energy(const DensityMatrix& gamma, const ManyBodyModel& model) {
  if (!model.local()) throw ModelError("the Toews-Pastor functional needs an on-site interaction");
  if (gamma.n_spatial() != model.n_spatial) throw ShapeError("density matrix does not match model dimension");
  const SiteArrays sa = site_arrays(gamma);
  const int n = model.n_spatial;
  EnergyReport r;
  r.one_body = one_body_energy(gamma, model);
  r.core = model.core_energy;
  r.double_occupation.resize(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double nu = gamma.block(0)(i, i), nd = gamma.block(1)(i, i);
    const double np = effective_occupation(0.5 * (nu + nd), sa.g2(i), sa.s(i));
    r.double_occupation[i] = site_value(nu, nd, sa.g2(i), np);
    sum += r.double_occupation[i];
  }
  r.interaction = model.hubbard_u() * sum;
  r.total = r.one_body + r.interaction + r.core;
  return r;
}

namespace detail {

// Chain rule through g2_i and S_i = v_i^T avg v_i; the scalar site function
// is differentiated by central differences.
BlockPair tows_pastor_gradient(const DensityMatrix& gamma, const ManyBodyModel& model) {
  const double u = model.hubbard_u();
  const SiteArrays sa = site_arrays(gamma);
  const int n = model.n_spatial;
  constexpr double h = 1e-6;

  Vector c_g = Vector::Zero(n), c_s = Vector::Zero(n);
  Vector f_up = Vector::Zero(n), f_down = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double nu = gamma.block(0)(i, i), nd = gamma.block(1)(i, i);
    const double g2 = sa.g2(i), s = sa.s(i);
    const double big_m = 0.5 * (nu + nd) + effective_occupation(0.5 * (nu + nd), g2, s);
    // Central differences of a single smooth branch; inside the kink window
    // the two one-sided derivatives are averaged.
    std::vector<Side> sides;
    if (std::abs(big_m - 1.0) <= kKinkWindow)
      sides = {Side::Below, Side::Above};
    else
      sides = {big_m <= 1.0 ? Side::Below : Side::Above};
    const double w = 1.0 / double(sides.size());
    const double hg = std::min(h, 0.5 * g2);
    for (Side side : sides) {
      auto f = [&](double au, double ad, double gg, double ss) {
        return site_value(au, ad, gg, effective_occupation(0.5 * (au + ad), gg, ss), side);
      };
      f_up(i) += w * (f(nu + h, nd, g2, s) - f(nu - h, nd, g2, s)) / (2 * h);
      f_down(i) += w * (f(nu, nd + h, g2, s) - f(nu, nd - h, g2, s)) / (2 * h);
      if (g2 <= kTinyHybridization) continue;
      c_g(i) += w * (f(nu, nd, g2 + hg, s) - f(nu, nd, g2 - hg, s)) / (2 * hg);
      c_s(i) += w * (f(nu, nd, g2, s + h) - f(nu, nd, g2, s - h)) / (2 * h);
    }
  }

  Matrix r = c_g.asDiagonal() * sa.v + c_s.asDiagonal() * sa.w;
  r.diagonal().setZero();
  const Matrix gbar = r + r.transpose() + sa.v.transpose() * c_s.asDiagonal() * sa.v;

  BlockPair grad;
  grad[0] = model.one_body + 0.5 * u * gbar;
  grad[0].diagonal() += u * f_up;
  grad[1] = model.one_body + 0.5 * u * gbar;
  grad[1].diagonal() += u * f_down;
  for (auto& g : grad) g = 0.5 * (g + g.transpose());
  return grad;
}

}  // namespace detail
}  // namespace diva
