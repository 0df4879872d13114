#pragma once

// Reference values: exact diagonalization, non-interacting energies and the
// half-filled Lieb-Wu ground state.

#include "diva/model.hpp"
#include "diva/rdm.hpp"

#include <cstdint>
#include <vector>

namespace diva {

struct FciResult {
  double energy = 0.0;
  DensityMatrix one_rdm;
  std::vector<double> double_occ;  ///< per-site <n_up n_down> (on-site models)
  std::int64_t dimension = 0;
};

inline constexpr std::int64_t kFciDimensionCap = 4'000'000;
inline constexpr int kFciMaxTensorOrbitals = 8;

/// Lanczos ground state in the occupation-number basis. DimensionError above
/// the basis-size cap (or beyond 8 orbitals for tensor interactions).
FciResult fci_ground_state(const ManyBodyModel& model, unsigned seed = 12345);

/// Saturates at INT64_MAX.
std::int64_t fci_dimension(const ManyBodyModel& model);

/// Sum of the occupied single-particle energies of the Hubbard chain (both spins).
double tight_binding_energy(const LatticeSpec& spec);

/// Ground-state energy per site of the infinite half-filled chain, in units of t.
double lieb_wu_half_filling(double u_over_t);

}  // namespace diva
