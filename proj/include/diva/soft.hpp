#pragma once

// Site-occupation self-consistency: pseudo-Kohn-Sham solve, fixed-diagonal
// DIVA inner loop and Hxc-potential update.

#include "diva/functional.hpp"
#include "diva/model.hpp"
#include "diva/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace diva {

struct SoftState {
  Vector v_hxc;
  double mu_pks = 0.0;
  std::array<Vector, kSpinBlocks> n_pks;
  int iteration = 0;
};

struct PksResult {
  DensityMatrix gamma;
  std::array<Vector, kSpinBlocks> n_pks;
  double mu_pks = 0.0;
  bool degenerate = false;
};

/// Aufbau ground state of t + diag(v_hxc) per spin. A degenerate Fermi level
/// is split by a 1e-8 diagonal perturbation (with a warning).
PksResult pks_solve(const ManyBodyModel& model, const Vector& v_hxc);

struct SoftConfig {
  int max_outer = 100;
  double mixing = 1.0;    ///< v <- (1 - a) v_old + a v_new
  int anderson_depth = 0;  ///< history length for Anderson acceleration; 0 = linear mixing
};

struct SoftRecord {
  int iter = 0;
  double energy = 0.0;
  double dv = 0.0;  ///< sup-norm of the potential update
  double mu_pks = 0.0;
  int inner_iterations = 0;
};

struct SoftResult {
  DensityMatrix gamma;
  EnergyReport report;
  SoftState state;
  std::vector<SoftRecord> trace;
  DivaTrace inner_trace;  ///< inner-loop trace of the final outer iteration
  bool converged = false;
  std::string status;
};

/// Converges when ||v_new - v||_inf < sqrt(cfg.energy_tol). The inner loop
/// always runs in FixDiagonal mode.
SoftResult soft_diva_run(const ManyBodyModel& model, const FunctionalSpec& spec, const DivaConfig& cfg,
                         const Vector& v_init, const SoftConfig& soft = {});

struct VxcRow {
  double n = 0.0;
  double u = 0.0;
  std::vector<double> v_xc;  ///< per site, gauge-fixed so that v_xc(n -> 0) = 0
  double gauge_shift = 0.0;  ///< added to v_hxc - U n / 2
  double v_hxc_mean = 0.0;
  double mu_pks = 0.0;
  bool converged = false;
  std::string error;  ///< non-empty when the grid point failed
};

/// v_xc = v_hxc - U n / 2 + shift on each filling of a uniform periodic chain.
/// The shift is minus the n -> 0 limit of v_hxc - U n / 2, extrapolated
/// linearly from the two lowest closed-shell fillings (1 and 3 electrons per
/// spin), so that v_xc(n -> 0) = 0 for every U.
std::vector<VxcRow> vxc_extract(const FunctionalSpec& spec, const DivaConfig& cfg, const LatticeSpec& lattice,
                                const std::vector<double>& fillings, const SoftConfig& soft = {}, int jobs = 1);

void write_vxc_csv(std::ostream& out, const std::vector<VxcRow>& rows, const FunctionalSpec& spec);

}  // namespace diva
