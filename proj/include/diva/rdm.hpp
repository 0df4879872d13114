#pragma once

// Spin-blocked one-particle reduced density matrices and the geometry of the
// ensemble N-representable set: every natural occupation in [0, 1].

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diva {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kSpinBlocks = 2;

/// One symmetric matrix per spin (up, down). Used for gradients and search
/// directions, which need not be representable.
using BlockPair = std::array<Matrix, kSpinBlocks>;

/// Natural occupations (ascending) and natural orbitals (columns) of one block.
struct SpectralDecomposition {
  Vector occupations;
  Matrix orbitals;
};

/// Diagonalize a real symmetric block. Throws NotSymmetric when the
/// antisymmetric part exceeds 1e-8 in Frobenius norm.
SpectralDecomposition spectral_decompose(const Matrix& block);

/// Symmetric eigensolver with ascending eigenvalues. Retries with diagonal
/// shifts when the QR iteration fails to converge (clusters near zero).
SpectralDecomposition symmetric_eigen(const Matrix& m, bool vectors = true);

/// Eigenvalues only (ascending); cheaper than spectral_decompose.
Vector occupation_numbers(const Matrix& block);

/// Immutable spin-blocked 1-RDM. Blocks are stored exactly symmetric; the
/// spectral decomposition is computed lazily and shared between copies.
class DensityMatrix {
 public:
  /// Validates shape, finiteness and symmetry (NotSymmetric above 1e-8),
  /// then symmetrizes. When `trace_target` is given each block trace must
  /// match it within 1e-10.
  DensityMatrix(Matrix up, Matrix down,
                std::optional<std::array<double, kSpinBlocks>> trace_target = std::nullopt);

  static DensityMatrix closed_shell(const Matrix& block);
  static DensityMatrix from_blocks(const BlockPair& blocks);

  int n_spatial() const noexcept { return static_cast<int>(blocks_[0].rows()); }
  const Matrix& block(int spin) const { return blocks_.at(spin); }
  const BlockPair& blocks() const noexcept { return blocks_; }
  double trace(int spin) const { return blocks_.at(spin).trace(); }
  const std::optional<std::array<double, kSpinBlocks>>& trace_target() const noexcept {
    return trace_target_;
  }

  /// True when both spin blocks are bitwise identical.
  bool spin_symmetric() const noexcept { return spin_symmetric_; }

  const SpectralDecomposition& spectrum(int spin) const;

  /// Returns this - theta * direction. The trace target is not carried over.
  DensityMatrix stepped(const BlockPair& direction, double theta) const;

 private:
  struct Cache;
  BlockPair blocks_;
  std::optional<std::array<double, kSpinBlocks>> trace_target_;
  bool spin_symmetric_ = false;
  std::shared_ptr<Cache> cache_;
};

struct DomainClass {
  enum class Tag { Interior, Boundary, BoundaryIdempotent, Outside };
  Tag tag = Tag::Interior;
  double pseudo_distance = 0.0;
};

inline constexpr double kDefaultTolBoundary = 1e-9;
inline constexpr double kDefaultTolInteger = 1e-8;

/// d = min(eta_1, 1 - eta_N) over both blocks.
double pseudo_distance(const DensityMatrix& gamma);
/// Same quantity computed from raw blocks without constructing a DensityMatrix.
double pseudo_distance(const BlockPair& blocks);

DomainClass classify(const DensityMatrix& gamma, double tol_boundary = kDefaultTolBoundary,
                     double tol_integer = kDefaultTolInteger);

const char* to_string(DomainClass::Tag tag);

/// Convex combination sum_s w_s * members_s. Weights must be >= -1e-12 and
/// sum to one within 1e-10.
DensityMatrix convex_combine(std::span<const DensityMatrix> members, std::span<const double> weights);

struct ConvexDecomposition {
  std::vector<double> weights;
  std::vector<DensityMatrix> members;
};

/// Splits gamma into idempotent matrices by repeatedly separating the
/// fractional occupation closest to 1/2 (ties: lowest index). Occupations
/// within tol_integer of 0 or 1 are snapped first. Spin-symmetric inputs are
/// decomposed jointly; otherwise the per-block decompositions are combined
/// as a product.
ConvexDecomposition idempotent_decompose(const DensityMatrix& gamma,
                                         double tol_integer = kDefaultTolInteger);

/// Number of occupations farther than tol_integer from {0, 1}, counted once
/// for spin-symmetric matrices and over both blocks otherwise.
int fractional_count(const DensityMatrix& gamma, double tol_integer = kDefaultTolInteger);

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b);
double frobenius_norm(const BlockPair& m);
double inner_product(const BlockPair& a, const BlockPair& b);

std::array<Vector, kSpinBlocks> site_occupations(const DensityMatrix& gamma);

/// Plain-text snapshot: a header line "N s" followed by N*s rows of N
/// entries at 17 significant digits (s = 1 when the blocks are identical).
void write_snapshot(std::ostream& out, const DensityMatrix& gamma);
DensityMatrix read_snapshot(std::istream& in);
void save_snapshot(const std::string& path, const DensityMatrix& gamma);
DensityMatrix load_snapshot(const std::string& path);

}  // namespace diva
