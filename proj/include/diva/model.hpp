#pragma once

// Many-body Hamiltonians: uniform Hubbard chains and FCIDUMP molecules.

#include "diva/rdm.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace diva {

/// On-site Hubbard repulsion U sum_i n_i,up n_i,down.
struct LocalU {
  double u = 0.0;
};

/// Dense two-electron integrals (ij|kl) in chemists' notation.
class FullTensor {
 public:
  FullTensor() = default;
  explicit FullTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const noexcept { return n_; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  /// Stores value at all eight real-orbital permutation images.
  void set_symmetric(int i, int j, int k, int l, double value);
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_ = 0;
  std::vector<double> data_;
};

using Interaction = std::variant<LocalU, FullTensor>;

struct LatticeSpec {
  int n_sites = 2;
  double hopping = 1.0;
  double coulomb = 0.0;
  bool periodic = true;
  double filling = 1.0;
};

struct ManyBodyModel {
  int n_spatial = 0;
  Matrix one_body;
  Interaction interaction = LocalU{};
  std::array<int, kSpinBlocks> n_electrons{0, 0};
  double core_energy = 0.0;
  /// Present for models produced by build_hubbard.
  std::optional<LatticeSpec> lattice;

  bool local() const noexcept { return std::holds_alternative<LocalU>(interaction); }
  double hubbard_u() const;
  /// Throws ShapeError or FillingError on inconsistent fields.
  void validate() const;
};

/// Electrons per spin for a lattice filling; FillingError unless n*L/2 is
/// integral within 1e-9.
int electrons_per_spin(const LatticeSpec& spec);

ManyBodyModel build_hubbard(const LatticeSpec& spec);

/// Same model with a different on-site U.
ManyBodyModel with_coulomb(const ManyBodyModel& model, double u);

ManyBodyModel parse_fcidump(std::istream& in);
ManyBodyModel load_fcidump(const std::string& path);
/// Writes unique nonzero integrals at 17 significant digits.
void write_fcidump(std::ostream& out, const ManyBodyModel& model);

struct BlochPoint {
  double k = 0.0;
  std::array<double, kSpinBlocks> eta{0.0, 0.0};
};

/// Occupation of each Bloch state k_m = 2 pi m / L - pi, m = 1..L, for a
/// translation-invariant periodic chain. NotUniform when gamma is not
/// circulant within 1e-6.
std::vector<BlochPoint> bloch_occupations(const DensityMatrix& gamma, const LatticeSpec& spec);

}  // namespace diva
