#pragma once

// Truncated Fock-basis state engine.
//
// States are stored block-diagonally: the basis of the full (row-major,
// mode-0 slowest) product space is partitioned into disjoint groups and each
// group carries a dense Hermitian block. Basis indices not covered by any
// block are zero rows/columns. Phase-covariant states such as the output of
// a beam splitter acting on an EPR pair and a thermal mode are block-diagonal
// in the photon-number difference, which keeps two-mode spectra cheap.

#include "qillum/errors.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qillum::fock {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

using qillum::DomainError;
using qillum::TruncationError;

inline constexpr double kDefaultTraceTol = 1e-5;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kEntropyFloor = 1e-14;
inline constexpr Index kMaxTotalDim = Index{1} << 22;

struct TruncationSpec {
  std::vector<int> dims;
  double trace_tol = kDefaultTraceTol;

  TruncationSpec() = default;
  TruncationSpec(std::vector<int> d, double tol = kDefaultTraceTol);

  void validate() const;
  int num_modes() const noexcept { return static_cast<int>(dims.size()); }
  Index total_dim() const noexcept;

  /// Row-major multi-index helpers (mode 0 slowest).
  Index flat(std::span<const int> occupation) const;
  std::vector<int> unflat(Index i) const;
  Index stride(int mode) const;

  friend bool operator==(const TruncationSpec&, const TruncationSpec&) = default;
};

/// A weighted sparse ket; used to build mixed states from pure-state ensembles.
struct SparseKet {
  double weight = 1.0;
  std::vector<Index> index;
  std::vector<cplx> amplitude;
};

class FockState {
public:
  struct Block {
    std::vector<Index> basis;
    Mat m;
  };

  FockState() = default;
  /// Cheap structural checks only; physical invariants are checked by check_invariants().
  FockState(TruncationSpec dims, std::vector<Block> blocks, double deficit = 0.0,
            bool pure_hint = false);

  /// Splits a dense matrix into the connected components of its nonzero pattern.
  static FockState from_dense(TruncationSpec dims, const Mat& m, double deficit = 0.0,
                              bool pure_hint = false);
  static FockState from_pure(TruncationSpec dims, const Vec& psi, double deficit = 0.0);
  /// rho = sum_k w_k |k><k|, blocks given by the union of the kets' supports.
  static FockState from_ensemble(TruncationSpec dims, std::span<const SparseKet> kets,
                                 double deficit = 0.0);

  const TruncationSpec& dims() const noexcept { return dims_; }
  int num_modes() const noexcept { return dims_.num_modes(); }
  Index dim() const noexcept { return dims_.total_dim(); }
  std::span<const Block> blocks() const noexcept { return blocks_; }
  bool is_pure_hint() const noexcept { return pure_hint_; }

  /// Weight of the ideal (untruncated) state that this representation omits.
  double truncation_deficit() const noexcept { return deficit_; }
  double trace() const;
  cplx element(Index row, Index col) const;
  Mat to_dense() const;

  FockState scaled(double factor) const;
  FockState normalized() const;
  FockState with_trace_tol(double tol) const;

  /// Hermiticity (1e-12 max-norm), PSD (eigenvalues >= -1e-10), trace within trace_tol of 1.
  void check_invariants() const;

  /// sum_n n * <n|rho_mode|n> for one mode.
  double mean_photon(int mode) const;
  /// Tr(rho^2)
  double purity() const;

  /// Pure-state ensemble from the spectral decomposition (eigenvalues above the entropy floor).
  std::vector<SparseKet> to_ensemble() const;

private:
  TruncationSpec dims_;
  std::vector<Block> blocks_;
  double deficit_ = 0.0;
  bool pure_hint_ = false;
};

/// p * a + (1 - p) * b on the common block refinement.
FockState mix(const FockState& a, const FockState& b, double p);

/// Joint block view of two states on the same space: every block of either
/// state lies inside exactly one joint block.
struct JointBlock {
  std::vector<Index> basis;
  Mat a;
  Mat b;
};
std::vector<JointBlock> joint_blocks(const FockState& a, const FockState& b);

// ---------------------------------------------------------------------------
// Constructors

FockState coherent_state(cplx alpha, int d, double trace_tol = kDefaultTraceTol,
                         bool renormalize = false);
FockState thermal_state(double nbar, int d, double trace_tol = kDefaultTraceTol,
                        bool renormalize = false);
/// D(alpha) S(r) |0>, with S(r) = exp(r/2 (a^2 - a^dag^2)); r > 0 squeezes x.
FockState squeezed_coherent_state(double r, cplx alpha, int d,
                                  double trace_tol = kDefaultTraceTol, bool renormalize = false);
/// sqrt(1 - l^2) sum_n (-l)^n |n>|n>, l = sqrt(nbar / (nbar + 1)).
FockState epr_state(double nbar, int d, double trace_tol = kDefaultTraceTol,
                    bool renormalize = false);

/// Fock amplitudes <n|alpha, r> for n < d (unnormalized by truncation).
Vec squeezed_coherent_amplitudes(double r, cplx alpha, int d);
Vec coherent_amplitudes(cplx alpha, int d);

// ---------------------------------------------------------------------------
// Structural operations

FockState tensor(const FockState& a, const FockState& b);
FockState partial_trace(const FockState& rho, std::span<const int> keep);

/// Unitary exp(theta (a_i^dag a_j - a_i a_j^dag)), sin^2 theta = reflectivity.
/// Heisenberg action: a_i -> sqrt(1-eps) a_i + sqrt(eps) a_j. The generator is
/// exponentiated on the truncated box, so the map is unitary and conserves
/// n_i + n_j exactly; it is exact for states supported below the cutoff.
FockState apply_beamsplitter(const FockState& rho, int mode_i, int mode_j, double reflectivity,
                             double phase_sign = +1.0);

/// Real orthogonal sector matrix of the beam splitter on the states
/// |n, N - n>, n in [lo, hi] (n = photons in port i). lo = 0, hi = N is the
/// exact full sector.
Eigen::MatrixXd beamsplitter_sector(int total, int lo, int hi, double reflectivity,
                                    double phase_sign = +1.0);

/// Probe mode mixed on a beam splitter with a thermal environment mode which
/// is then traced out. The detector output replaces the probe mode and
/// carries sqrt(eps) a_probe + sqrt(1-eps) a_env. The environment is
/// instantiated explicitly with env_dim levels; sectors are exact.
struct ThermalMixDims {
  int env_dim = 0;
  int out_dim = 0;
  double trace_tol = kDefaultTraceTol;
};
FockState mix_with_thermal(const FockState& probe, int probe_mode, double reflectivity,
                           double nbar_env, const ThermalMixDims& dims,
                           double phase_sign = +1.0);

/// The same channel with an untruncated environment, applied as a pure-loss
/// channel (transmissivity eps / G) followed by a quantum-limited amplifier
/// (gain G = 1 + (1 - eps) nbar_env), both in closed-form Kraus operators.
/// Only the output mode is truncated, at out_dim levels.
FockState thermal_attenuator(const FockState& probe, int probe_mode, double reflectivity,
                             double nbar_env, int out_dim, double trace_tol = kDefaultTraceTol,
                             double phase_sign = +1.0);

// ---------------------------------------------------------------------------
// Spectral operations

struct SpectralDecomposition {
  struct Piece {
    std::vector<Index> basis;
    Eigen::VectorXd values;
    Mat vectors;
  };
  Index dim = 0;
  std::vector<Piece> pieces;

  /// All eigenvalues (including zeros of uncovered rows), descending.
  Eigen::VectorXd eigenvalues() const;
  /// Dense eigenvector matrix, columns ordered like eigenvalues(). O(dim^2) memory.
  Mat eigenvectors() const;
  Mat reconstruct() const;
};

SpectralDecomposition spectral(const FockState& rho);

/// Clips eigenvalues in [-1e-10, 0) to zero; throws DomainError for larger negatives.
Eigen::VectorXd repaired_spectrum(const Eigen::VectorXd& eigenvalues);

/// Shannon entropy in bits of a (renormalized) clipped spectrum.
double spectrum_entropy(const Eigen::VectorXd& eigenvalues);
double von_neumann_entropy(const FockState& rho);

// ---------------------------------------------------------------------------
// Measurement

struct Conditional {
  FockState state;  ///< unnormalized, on the remaining modes
  double density = 0.0;  ///< trace of state = outcome probability density
};

/// (I (x) <phi|) rho (I (x) |phi>) / pi for a ket on one mode. With |phi> a
/// displaced pure state this is the density of a covariant POVM over d^2 beta.
Conditional project_pure(const FockState& rho, int mode, const Vec& ket);

/// Heterodyne projection onto |beta><beta| / pi. Throws TruncationError if the
/// coherent ket loses more than tol of its weight on the mode's cutoff.
Conditional project_coherent(const FockState& rho, int mode, cplx beta,
                             std::optional<double> tol = std::nullopt);

}  // namespace qillum::fock
