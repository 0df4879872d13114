#include "diva/rdm.hpp"

#include "diva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

namespace diva {
namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kTraceTol = 1e-10;
constexpr double kWeightFloor = -1e-12;
constexpr double kWeightSumTol = 1e-10;

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ShapeError(std::string(what) + ": expected a non-empty square matrix");
}

void check_symmetric(const Matrix& m) {
  const double asym = 0.5 * (m - m.transpose()).norm();
  if (asym > kSymmetryTol) {
    std::ostringstream os;
    os << "antisymmetric part has Frobenius norm " << asym;
    throw NotSymmetric(os.str());
  }
}

bool is_integral(double eta, double tol) { return std::abs(eta) <= tol || std::abs(1.0 - eta) <= tol; }

using Bits = std::vector<unsigned char>;

// Recursive Appendix-style split in the natural-orbital basis of one block:
// the chosen fractional eta_k is sent to 0 (weight 1 - eta_k) or 1 (weight
// eta_k). All other occupations are untouched, so the branches commute.
void split_block(Vector eta, double weight, double tol, std::vector<std::pair<double, Bits>>& out) {
  int pick = -1;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (is_integral(eta(i), tol)) continue;
    const double dist = std::abs(eta(i) - 0.5);
    if (dist < best - 1e-12) {
      best = dist;
      pick = static_cast<int>(i);
    }
  }
  if (pick < 0) {
    Bits bits(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) bits[i] = eta(i) > 0.5 ? 1 : 0;
    out.emplace_back(weight, std::move(bits));
    return;
  }
  const double ek = eta(pick);
  Vector lo = eta, hi = eta;
  lo(pick) = 0.0;
  hi(pick) = 1.0;
  split_block(std::move(lo), weight * (1.0 - ek), tol, out);
  split_block(std::move(hi), weight * ek, tol, out);
}

std::vector<std::pair<double, Matrix>> decompose_block(const SpectralDecomposition& sd, double tol) {
  Vector eta = sd.occupations;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (std::abs(eta(i)) <= tol) eta(i) = 0.0;
    else if (std::abs(1.0 - eta(i)) <= tol) eta(i) = 1.0;
  }
  std::vector<std::pair<double, Bits>> raw;
  split_block(eta, 1.0, tol, raw);
  std::vector<std::pair<double, Matrix>> out;
  out.reserve(raw.size());
  const Matrix& u = sd.orbitals;
  for (auto& [w, bits] : raw) {
    Vector occ(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) occ(i) = bits[i];
    Matrix p = u * occ.asDiagonal() * u.transpose();
    out.emplace_back(w, 0.5 * (p + p.transpose()));
  }
  return out;
}

double block_pseudo_distance(const Vector& eta) { return std::min(eta(0), 1.0 - eta(eta.size() - 1)); }

}  // namespace

SpectralDecomposition symmetric_eigen(const Matrix& m, bool vectors) {
  const Matrix sym = 0.5 * (m + m.transpose());
  const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  const int options = vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  for (double shift : {0.0, 1.0, -1.0, 0.37, -0.37}) {
    Matrix a = sym;
    a.diagonal().array() += shift * scale;
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, options);
    if (es.info() != Eigen::Success) continue;
    SpectralDecomposition out;
    out.occupations = es.eigenvalues().array() - shift * scale;
    if (vectors) out.orbitals = es.eigenvectors();
    return out;
  }
  throw Error("eigensolver failed to converge");
}

SpectralDecomposition spectral_decompose(const Matrix& block) {
  check_square(block, "spectral_decompose");
  check_symmetric(block);
  return symmetric_eigen(block);
}

Vector occupation_numbers(const Matrix& block) {
  check_square(block, "occupation_numbers");
  check_symmetric(block);
  return symmetric_eigen(block, false).occupations;
}

struct DensityMatrix::Cache {
  std::mutex lock;
  bool ready[kSpinBlocks] = {false, false};
  SpectralDecomposition spectra[kSpinBlocks];
};

DensityMatrix::DensityMatrix(Matrix up, Matrix down, std::optional<std::array<double, kSpinBlocks>> trace_target)
    : trace_target_(trace_target), cache_(std::make_shared<Cache>()) {
  check_square(up, "DensityMatrix");
  check_square(down, "DensityMatrix");
  if (up.rows() != down.rows()) throw ShapeError("spin blocks differ in dimension");
  if (!up.allFinite() || !down.allFinite()) throw ShapeError("density matrix has non-finite entries");
  check_symmetric(up);
  check_symmetric(down);
  blocks_[0] = 0.5 * (up + up.transpose());
  blocks_[1] = 0.5 * (down + down.transpose());
  spin_symmetric_ = blocks_[0] == blocks_[1];
  if (trace_target_) {
    for (int s = 0; s < kSpinBlocks; ++s) {
      const double tr = blocks_[s].trace();
      const double target = (*trace_target_)[s];
      if (target < 0.0 || std::abs(tr - target) > kTraceTol) {
        std::ostringstream os;
        os << "block " << s << " trace " << tr << " does not match target " << target;
        throw ShapeError(os.str());
      }
    }
  }
}

DensityMatrix DensityMatrix::closed_shell(const Matrix& block) { return DensityMatrix(block, block); }

DensityMatrix DensityMatrix::from_blocks(const BlockPair& blocks) { return DensityMatrix(blocks[0], blocks[1]); }

const SpectralDecomposition& DensityMatrix::spectrum(int spin) const {
  if (spin < 0 || spin >= kSpinBlocks) throw std::out_of_range("spin index");
  const int slot = spin_symmetric_ ? 0 : spin;
  std::lock_guard<std::mutex> guard(cache_->lock);
  if (!cache_->ready[slot]) {
    cache_->spectra[slot] = spectral_decompose(blocks_[slot]);
    cache_->ready[slot] = true;
  }
  return cache_->spectra[slot];
}

DensityMatrix DensityMatrix::stepped(const BlockPair& direction, double theta) const {
  return DensityMatrix(blocks_[0] - theta * direction[0], blocks_[1] - theta * direction[1]);
}

double pseudo_distance(const DensityMatrix& gamma) {
  return std::min(block_pseudo_distance(gamma.spectrum(0).occupations),
                  block_pseudo_distance(gamma.spectrum(1).occupations));
}

double pseudo_distance(const BlockPair& blocks) {
  double d = block_pseudo_distance(occupation_numbers(blocks[0]));
  if (blocks[0] != blocks[1]) d = std::min(d, block_pseudo_distance(occupation_numbers(blocks[1])));
  return d;
}

DomainClass classify(const DensityMatrix& gamma, double tol_boundary, double tol_integer) {
  DomainClass out;
  out.pseudo_distance = pseudo_distance(gamma);
  if (out.pseudo_distance < -tol_boundary) {
    out.tag = DomainClass::Tag::Outside;
  } else if (out.pseudo_distance > tol_boundary) {
    out.tag = DomainClass::Tag::Interior;
  } else {
    bool idempotent = true;
    for (int s = 0; s < kSpinBlocks && idempotent; ++s)
      for (double eta : gamma.spectrum(s).occupations)
        if (!is_integral(eta, tol_integer)) {
          idempotent = false;
          break;
        }
    out.tag = idempotent ? DomainClass::Tag::BoundaryIdempotent : DomainClass::Tag::Boundary;
  }
  return out;
}

const char* to_string(DomainClass::Tag tag) {
  switch (tag) {
    case DomainClass::Tag::Interior: return "Interior";
    case DomainClass::Tag::Boundary: return "Boundary";
    case DomainClass::Tag::BoundaryIdempotent: return "BoundaryIdempotent";
    case DomainClass::Tag::Outside: return "Outside";
  }
  return "?";
}

DensityMatrix convex_combine(std::span<const DensityMatrix> members, std::span<const double> weights) {
  if (members.empty()) throw ShapeError("convex_combine: no members");
  if (members.size() != weights.size()) throw ShapeError("convex_combine: weight count differs from member count");
  const int n = members.front().n_spatial();
  double sum = 0.0;
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].n_spatial() != n) throw ShapeError("convex_combine: members differ in dimension");
    if (!(weights[s] >= kWeightFloor)) throw WeightError("convex_combine: negative weight");
    sum += weights[s];
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    std::ostringstream os;
    os << "convex_combine: weights sum to " << sum;
    throw WeightError(os.str());
  }
  Matrix up = weights[0] * members[0].block(0);
  Matrix down = weights[0] * members[0].block(1);
  for (std::size_t s = 1; s < members.size(); ++s) {
    up += weights[s] * members[s].block(0);
    down += weights[s] * members[s].block(1);
  }
  return DensityMatrix(std::move(up), std::move(down));
}

ConvexDecomposition idempotent_decompose(const DensityMatrix& gamma, double tol_integer) {
  const DomainClass cls = classify(gamma, kDefaultTolBoundary, tol_integer);
  if (cls.tag == DomainClass::Tag::Outside) {
    std::ostringstream os;
    os << "matrix lies outside the representable set (d = " << cls.pseudo_distance << ")";
    throw NotRepresentable(os.str());
  }
  ConvexDecomposition out;
  if (gamma.spin_symmetric()) {
    for (auto& [w, p] : decompose_block(gamma.spectrum(0), tol_integer)) {
      out.weights.push_back(w);
      out.members.push_back(DensityMatrix::closed_shell(p));
    }
    return out;
  }
  const auto up = decompose_block(gamma.spectrum(0), tol_integer);
  const auto down = decompose_block(gamma.spectrum(1), tol_integer);
  for (const auto& [wu, pu] : up)
    for (const auto& [wd, pd] : down) {
      out.weights.push_back(wu * wd);
      out.members.emplace_back(pu, pd);
    }
  return out;
}

int fractional_count(const DensityMatrix& gamma, double tol_integer) {
  int count = 0;
  const int blocks = gamma.spin_symmetric() ? 1 : kSpinBlocks;
  for (int s = 0; s < blocks; ++s)
    for (double eta : gamma.spectrum(s).occupations)
      if (!is_integral(eta, tol_integer)) ++count;
  return count;
}

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.n_spatial() != b.n_spatial()) throw ShapeError("frobenius_distance: dimension mismatch");
  return std::sqrt((a.block(0) - b.block(0)).squaredNorm() + (a.block(1) - b.block(1)).squaredNorm());
}

double frobenius_norm(const BlockPair& m) { return std::sqrt(m[0].squaredNorm() + m[1].squaredNorm()); }

double inner_product(const BlockPair& a, const BlockPair& b) {
  if (a[0].rows() != b[0].rows() || a[1].rows() != b[1].rows()) throw ShapeError("inner_product: dimension mismatch");
  return a[0].cwiseProduct(b[0]).sum() + a[1].cwiseProduct(b[1]).sum();
}

std::array<Vector, kSpinBlocks> site_occupations(const DensityMatrix& gamma) {
  return {gamma.block(0).diagonal(), gamma.block(1).diagonal()};
}

void write_snapshot(std::ostream& out, const DensityMatrix& gamma) {
  const int n = gamma.n_spatial();
  const int s = gamma.spin_symmetric() ? 1 : kSpinBlocks;
  out << n << ' ' << s << '\n';
  char buf[40];
  for (int b = 0; b < s; ++b) {
    const Matrix& m = gamma.block(b);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        if (j) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  }
}

DensityMatrix read_snapshot(std::istream& in) {
  long n = 0, s = 0;
  if (!(in >> n >> s)) throw SnapshotError("missing \"N s\" header");
  if (n <= 0 || n > 100000) throw SnapshotError("invalid dimension in header");
  if (s != 1 && s != 2) throw SnapshotError("spin block count must be 1 or 2");
  BlockPair blocks;
  for (long b = 0; b < s; ++b) {
    blocks[b].resize(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        if (!(in >> blocks[b](i, j))) throw SnapshotError("truncated or malformed matrix entries");
  }
  std::string extra;
  if (in >> extra) throw SnapshotError("unexpected trailing data: " + extra);
  if (s == 1) blocks[1] = blocks[0];
  return DensityMatrix(blocks[0], blocks[1]);
}

void save_snapshot(const std::string& path, const DensityMatrix& gamma) {
  std::ofstream f(path);
  if (!f) throw SnapshotError("cannot open " + path + " for writing");
  write_snapshot(f, gamma);
  if (!f) throw SnapshotError("write failed for " + path);
}

DensityMatrix load_snapshot(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SnapshotError("cannot open " + path);
  return read_snapshot(f);
}

}  // namespace diva
