#include "diva/soft.hpp"

#include "diva/errors.hpp"
#include "diva/log.hpp"
#include "diva/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace diva {

namespace {

std::string tag_value(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

PksResult pks_solve(const ManyBodyModel& model, const Vector& v_hxc) {
  model.validate();
  const int n = model.n_spatial;
  if (v_hxc.size() != n) throw ShapeError("v_hxc length differs from the number of sites");
  if (!v_hxc.allFinite()) throw std::invalid_argument("v_hxc has non-finite entries");
  Matrix h = model.one_body;
  h.diagonal() += v_hxc;
  bool degenerate = false;
  std::array<Aufbau, kSpinBlocks> fill;
  for (int s = 0; s < kSpinBlocks; ++s) {
    fill[s] = aufbau_fill(h, model.n_electrons[s]);
    degenerate = degenerate || fill[s].degenerate;
  }
  if (degenerate) {
    log::warn("DegeneracyWarning: degenerate pseudo-Kohn-Sham Fermi level; applying a 1e-8 diagonal perturbation");
    for (int i = 0; i < n; ++i) h(i, i) += 1e-8 * double(i + 1) / n;
    for (int s = 0; s < kSpinBlocks; ++s) fill[s] = aufbau_fill(h, model.n_electrons[s]);
  }
  double mu = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < kSpinBlocks; ++s)
    if (model.n_electrons[s] > 0) mu = std::max(mu, fill[s].homo);
  Matrix down = model.n_electrons[0] == model.n_electrons[1] ? fill[0].projector : fill[1].projector;
  DensityMatrix gamma(fill[0].projector, std::move(down),
                      std::array<double, 2>{double(model.n_electrons[0]), double(model.n_electrons[1])});
  std::array<Vector, kSpinBlocks> occ = site_occupations(gamma);
  return {std::move(gamma), std::move(occ), mu, degenerate};
}

SoftResult soft_diva_run(const ManyBodyModel& model, const FunctionalSpec& spec, const DivaConfig& cfg,
                         const Vector& v_init, const SoftConfig& soft) {
  cfg.validate();
  if (soft.max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  if (!(soft.mixing > 0.0 && soft.mixing <= 1.0)) throw std::invalid_argument("mixing must lie in (0, 1]");
  if (soft.anderson_depth < 0) throw std::invalid_argument("anderson_depth must be nonnegative");
  DivaConfig inner = cfg;
  inner.diagonal_mode = DiagonalMode::FixDiagonal;
  const double tol = std::sqrt(cfg.energy_tol);

  Vector v = v_init;
  std::optional<DivaResult> last;
  std::optional<Matrix> last_pks;
  std::vector<SoftRecord> records;
  SoftState state;
  std::vector<Vector> hist_v, hist_f;
  bool converged = false;
  for (int s = 1; s <= soft.max_outer; ++s) {
    const PksResult pks = pks_solve(model, v);
    const bool same = last_pks && (pks.gamma.block(0) - *last_pks).cwiseAbs().maxCoeff() == 0.0;
    if (!same) last = diva_run(model, spec, inner, pks.gamma);
    last_pks = pks.gamma.block(0);

    const BlockPair grad = gradient(last->gamma, model, spec);
    const Vector diag = 0.5 * (grad[0].diagonal() + grad[1].diagonal());
    const Vector v_new = v + diag - Vector::Constant(v.size(), pks.mu_pks);
    const double dv = (v_new - v).lpNorm<Eigen::Infinity>();

    state.mu_pks = pks.mu_pks;
    state.n_pks = pks.n_pks;
    state.iteration = s;
    state.v_hxc = v;
    records.push_back({s, last->report.total, dv, pks.mu_pks, last->iterations});
    if (dv < tol) {
      converged = true;
      break;
    }
    const Vector f = v_new - v;
    Vector next = v + soft.mixing * f;
    if (soft.anderson_depth > 0 && !hist_v.empty()) {
      const Eigen::Index k = Eigen::Index(hist_v.size());
      Matrix dv_hist(v.size(), k), df_hist(v.size(), k);
      for (Eigen::Index j = 0; j < k; ++j) {
        dv_hist.col(j) = v - hist_v[j];
        df_hist.col(j) = f - hist_f[j];
      }
      const Vector c = df_hist.completeOrthogonalDecomposition().solve(f);
      if (c.allFinite()) next -= (dv_hist + soft.mixing * df_hist) * c;
    }
    if (soft.anderson_depth > 0) {
      hist_v.push_back(v);
      hist_f.push_back(f);
      if (int(hist_v.size()) > soft.anderson_depth) {
        hist_v.erase(hist_v.begin());
        hist_f.erase(hist_f.begin());
      }
    }
    v = std::move(next);
  }
  if (!converged) log::warn("OuterMaxIterations: SOFT-DIVA stopped before the potential converged");
  SoftResult out{last->gamma, last->report, std::move(state), std::move(records), last->trace, converged,
                 converged ? "converged" : "outer_max_iterations"};
  return out;
}

std::vector<VxcRow> vxc_extract(const FunctionalSpec& spec, const DivaConfig& cfg, const LatticeSpec& lattice,
                                const std::vector<double>& fillings, const SoftConfig& soft, int jobs) {
  if (!lattice.periodic) throw NotUniform("v_xc extraction needs a periodic uniform chain");
  const double len = lattice.n_sites;
  std::vector<double> all = fillings;
  all.push_back(2.0 / len);
  const bool two_point = lattice.n_sites >= 4;
  if (two_point) all.push_back(6.0 / len);
  auto point = [&](std::size_t idx) {
    VxcRow row;
    row.n = all[idx];
    row.u = lattice.coulomb;
    try {
      LatticeSpec ls = lattice;
      ls.filling = row.n;
      const ManyBodyModel model = build_hubbard(ls);
      const SoftResult r = soft_diva_run(model, spec, cfg, Vector::Zero(ls.n_sites), soft);
      const Vector& v = r.state.v_hxc;
      row.v_xc.resize(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double n_site = r.gamma.block(0)(i, i) + r.gamma.block(1)(i, i);
        row.v_xc[i] = v(i) - 0.5 * lattice.coulomb * n_site;
      }
      row.v_hxc_mean = v.mean();
      row.mu_pks = r.state.mu_pks;
      row.converged = r.converged;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };
  std::vector<VxcRow> rows = parallel_map(all.size(), jobs, point);

  auto mean = [](const VxcRow& r) {
    double s = 0.0;
    for (double x : r.v_xc) s += x;
    return s / double(r.v_xc.size());
  };
  const VxcRow& low1 = rows[fillings.size()];
  double shift = std::numeric_limits<double>::quiet_NaN();
  std::string gauge_error;
  if (!low1.error.empty()) {
    gauge_error = "gauge reference failed: " + low1.error;
  } else if (!two_point) {
    shift = -mean(low1);
  } else if (!rows.back().error.empty()) {
    gauge_error = "gauge reference failed: " + rows.back().error;
  } else {
    const double x1 = low1.n, x3 = rows.back().n, y1 = mean(low1), y3 = mean(rows.back());
    shift = -(y1 - x1 * (y3 - y1) / (x3 - x1));
  }
  rows.resize(fillings.size());
  for (auto& r : rows) {
    r.gauge_shift = shift;
    for (double& x : r.v_xc) x += shift;
    if (!gauge_error.empty() && r.error.empty()) r.error = gauge_error;
  }
  return rows;
}

void write_vxc_csv(std::ostream& out, const std::vector<VxcRow>& rows, const FunctionalSpec& spec) {
  out << "# gauge: v_xc(n->0) = 0 (v_xc = v_hxc - U*n/2 + shift; shift extrapolated from 1 and 3 electrons per spin; "
         "v_xc_raw omits shift)\n";
  if (!rows.empty()) out << "# gauge_shift: " << tag_value(rows.front().gauge_shift) << '\n';
  out << "# hartree_convention: V_H = U*n/2 per spin, n = total site occupation\n";
  out << "# functional: " << to_string(spec.kind) << '\n';
  out << "n,U,v_xc,v_xc_min,v_xc_max,v_xc_raw,v_hxc,mu_pks,converged,error\n";
  char buf[512];
  for (const auto& r : rows) {
    double mean = 0.0, lo = 0.0, hi = 0.0;
    if (!r.v_xc.empty()) {
      lo = hi = r.v_xc.front();
      for (double x : r.v_xc) {
        mean += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      mean /= double(r.v_xc.size());
    }
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,", r.n, r.u, mean, lo, hi,
                  mean - r.gauge_shift, r.v_hxc_mean, r.mu_pks, r.converged ? 1 : 0);
    out << buf << '"' << r.error << '"' << '\n';
  }
}

}  // namespace diva
