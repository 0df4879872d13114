#pragma once

// Energy functionals E[gamma] = T[gamma] + W[gamma] and their gradients.
//
// Gradient convention: G is the symmetric matrix with dE = <G, dgamma>_F for
// symmetric perturbations, i.e. G_ij = dE/dh when gamma_ij and gamma_ji both
// move by h/2 (diagonal entries move by h).

#include "diva/model.hpp"
#include "diva/rdm.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace diva {

enum class FunctionalKind { HartreeFock, Mueller, ToewsPastor };

const char* to_string(FunctionalKind kind);
FunctionalKind parse_functional_kind(const std::string& name);

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::Mueller;
  double fd_step = 1e-5;
  /// Closed-form gradient for HF and Mueller; for Toews-Pastor a
  /// semi-analytic form. When false every element is finite-differenced.
  bool analytic_gradient = true;

  /// Throws std::invalid_argument / ModelError on inconsistent settings.
  void validate(const ManyBodyModel& model) const;
};

struct EnergyReport {
  double total = 0.0;
  double one_body = 0.0;
  double interaction = 0.0;
  double core = 0.0;
  /// Per-site <n_up n_down> (on-site models only).
  std::vector<double> double_occupation;
  double mu = 0.0;
};

double one_body_energy(const DensityMatrix& gamma, const ManyBodyModel& model);

/// sqrt(eta_i eta_j) with inputs clamped to [0, 1].
double mueller_pair(double eta_i, double eta_j);

EnergyReport hartree_fock_energy(const DensityMatrix& gamma, const ManyBodyModel& model);
EnergyReport mueller_energy(const DensityMatrix& gamma, const ManyBodyModel& model);

/// Effective two-level description of one lattice site.
struct TowsPastorSite {
  double n_up = 0.0;
  double n_down = 0.0;
  double n = 0.0;        ///< spin-averaged site occupation
  double g2 = 0.0;       ///< sum_{j != i} gamma_ij^2
  double n_prime = 0.0;  ///< occupation of the effective neighbour orbital
  double M = 0.0;
  double m = 0.0;
  double g0_2 = 0.0;
  double ginf_2 = 0.0;
};

/// Fills M, m, g0_2 and ginf_2 from n_up, n_down, g2 and n_prime.
TowsPastorSite tows_pastor_site(double n_up, double n_down, double g2, double n_prime);

/// Site double occupation, clamped to [0, min(n_up, n_down)].
double tows_pastor_double_occ(const TowsPastorSite& site);

EnergyReport tows_pastor_energy(const DensityMatrix& gamma, const ManyBodyModel& model);

EnergyReport evaluate(const DensityMatrix& gamma, const ManyBodyModel& model, const FunctionalSpec& spec);

BlockPair gradient(const DensityMatrix& gamma, const ManyBodyModel& model, const FunctionalSpec& spec);

/// Central-difference gradient of an arbitrary block functional.
BlockPair numeric_gradient(const std::function<double(const BlockPair&)>& energy, const BlockPair& at, double h,
                           bool spin_symmetric = false);

enum class DiagonalMode { ConserveN, FixDiagonal };

/// ConserveN removes the mean of the diagonal; FixDiagonal zeroes it.
/// Returns the processed matrix and the mean of the original diagonal.
std::pair<Matrix, double> gradient_postprocess(const Matrix& grad, DiagonalMode mode);

/// Energy and gradient evaluators bound to a model and functional.
struct Objective {
  std::function<double(const DensityMatrix&)> energy;
  std::function<BlockPair(const DensityMatrix&)> gradient;
};

Objective make_objective(const ManyBodyModel& model, const FunctionalSpec& spec);

}  // namespace diva
