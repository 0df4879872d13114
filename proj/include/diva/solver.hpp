#pragma once

// DIVA minimization: boundary search along descent directions followed by
// interpolation inside the convex set of representable 1-RDMs.

#include "diva/functional.hpp"
#include "diva/model.hpp"
#include "diva/rdm.hpp"

#include <optional>
#include <string>
#include <vector>

namespace diva {

enum class DivaMode { Mono, Multi };
enum class DirectionKind { SteepestDescent, ConjugateGradient };

const char* to_string(DivaMode mode);
const char* to_string(DirectionKind kind);
const char* to_string(DiagonalMode mode);

struct DivaConfig {
  DivaMode mode = DivaMode::Mono;
  double energy_tol = 1e-8;
  double rdm_tol = 1e-5;
  int max_iters = 200;
  double theta_growth = 2.0;
  double bracket_tol = 1e-10;
  DirectionKind direction = DirectionKind::ConjugateGradient;
  DiagonalMode diagonal_mode = DiagonalMode::ConserveN;

  void validate() const;
};

struct DivaRecord {
  int iter = 0;
  double energy = 0.0;
  double delta_energy = 0.0;
  double delta_rdm = 0.0;
  double mu = 0.0;
  int n_boundary_members = 0;
  std::vector<double> weights;
};

struct DivaTrace {
  std::vector<DivaRecord> records;
};

struct DivaResult {
  DensityMatrix gamma;
  EnergyReport report;
  DivaTrace trace;
  bool converged = false;
  int iterations = 0;
  std::string status;
  /// Postprocessed gradient at the returned point (empty if unavailable).
  BlockPair gradient;
  /// max_i |grad_ii - mu| over both spins at the returned point.
  double diagonal_spread = 0.0;
};

/// Lowest n eigenvectors of a symmetric one-body matrix.
struct Aufbau {
  Matrix projector;
  Vector energies;
  double homo = 0.0;
  bool degenerate = false;
};
Aufbau aufbau_fill(const Matrix& h, int n_occupied);

/// Idempotent aufbau filling of the one-body Hamiltonian per spin.
DensityMatrix initial_guess(const ManyBodyModel& model);

/// Point gamma - theta* direction with pseudo-distance in [0, bracket_tol].
/// Throws DirectionError when the ray does not leave the set after 200
/// growth steps.
struct BoundaryPoint {
  DensityMatrix gamma;
  double theta = 0.0;
};
BoundaryPoint boundary_search(const DensityMatrix& gamma, const BlockPair& direction, const DivaConfig& cfg);

struct LineResult {
  double z = 0.0;
  DensityMatrix gamma;
  double energy = 0.0;
};

/// Minimizes z -> E[(1 - z) a + z b] on [0, 1].
LineResult line_minimize(const DensityMatrix& a, const DensityMatrix& b,
                         const std::function<double(const DensityMatrix&)>& energy,
                         std::optional<double> energy_a = std::nullopt, std::optional<double> energy_b = std::nullopt);

struct MultiResult {
  std::vector<double> z;  ///< weights of {anchor, members...}
  DensityMatrix gamma;
  double energy = 0.0;
  bool stalled = false;
};

/// Minimizes E over the simplex spanned by {anchor, members}. `warm` holds
/// starting weights (missing trailing entries start at zero).
MultiResult multi_minimize(const DensityMatrix& anchor, const std::vector<DensityMatrix>& members,
                           const Objective& objective, const std::vector<double>& warm = {});

DivaResult diva_run(const ManyBodyModel& model, const FunctionalSpec& spec, const DivaConfig& cfg,
                    const std::optional<DensityMatrix>& start = std::nullopt);

/// Same loop over an arbitrary objective.
DivaResult diva_minimize(const Objective& objective, const DivaConfig& cfg, const DensityMatrix& start);

}  // namespace diva
