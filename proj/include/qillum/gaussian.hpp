#pragma once

// Covariance-matrix description of one- and two-mode Gaussian states.
//
// Quadratures x = a + a^dag, p = i(a^dag - a), ordered (x1, p1, x2, p2); the
// vacuum has covariance I. The covariance is V_kl = <{dR_k, dR_l}>/2.

#include "qillum/errors.hpp"
#include "qillum/fock.hpp"
#include "qillum/params.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace qillum::gauss {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kUncertaintyTol = 1e-9;

struct GaussianState {
  VectorXd mean;
  MatrixXd cov;

  GaussianState() = default;
  /// Validates symmetry and the uncertainty relation V + i Omega >= 0.
  GaussianState(VectorXd mean, MatrixXd cov);

  int modes() const noexcept { return static_cast<int>(mean.size() / 2); }
  Matrix2d block(int i, int j) const { return cov.block<2, 2>(2 * i, 2 * j); }
  GaussianState reduced(int mode) const;
};

/// Smallest eigenvalue of V + i Omega.
double uncertainty_margin(const MatrixXd& cov);

GaussianState vacuum_cm(int modes = 1);
GaussianState thermal_cm(double nbar);
GaussianState coherent_cm(std::complex<double> alpha);
/// D(alpha) S(r)|0>; r > 0 squeezes x: V = diag(e^{-2r}, e^{2r}).
GaussianState squeezed_coherent_cm(double r, std::complex<double> alpha);
/// Two-mode squeezed vacuum, cross block cross_sign * 2 sqrt(n(n+1)) diag(1, -1).
/// cross_sign = -1 matches fock::epr_state.
GaussianState epr_cm(double nbar, double cross_sign = -1.0);

/// Phase rotation a -> e^{-i phi} a on one mode.
GaussianState rotate_mode(const GaussianState& g, int mode, double phi);

std::vector<double> symplectic_eigenvalues(const GaussianState& g);

/// Entropy in bits of a single symplectic eigenvalue x >= 1.
double f_entropy(double x);
/// Entropy of a thermal mode with mean photon number nbar, in bits.
double g_entropy(double nbar);
double gaussian_entropy(const GaussianState& g);
/// S(A) + S(B) - S(AB) for a two-mode state.
double mutual_information(const GaussianState& g);

/// First and second moments of a Fock-space state.
GaussianState moments_from_fock(const fock::FockState& rho);

/// Projection of mode B onto the pure Gaussian state with covariance
/// Sigma = diag((1-t)/t, t/(1-t)), displaced by the outcome beta; t = 1/2 is
/// heterodyne. Equivalently a squeezed coherent ket with r = ln(t/(1-t))/2.
struct GeneralDyne {
  double t = 0.5;

  explicit GeneralDyne(double transmissivity);
  Matrix2d sigma() const;
  double squeezing() const;
};

struct DyneConditional {
  GaussianState conditional;  ///< mode A at outcome beta = 0
  Matrix2d gain;  ///< conditional mean = mean_A + gain * (2(Re b, Im b) - mean_B)
  Matrix2d outcome_cov;  ///< B + Sigma
  Vector2d mean_b;

  /// Outcome density over d^2 beta.
  double density(std::complex<double> beta) const;
  Vector2d conditional_mean(std::complex<double> beta) const;
};

DyneConditional conditional_after_generaldyne(const GaussianState& g, const GeneralDyne& m);

/// S(B) - S(AB) + S(A|m) for a general-dyne measurement on mode B.
double gaussian_discord(const GaussianState& g, const GeneralDyne& m);

struct DiscordOptimum {
  double value = 0.0;
  double t = 0.5;
};
/// 19-point grid on [0.05, 0.95] followed by golden-section refinement.
DiscordOptimum gaussian_discord_opt(const GaussianState& g);

/// Detector/idler covariance for the given hypothesis: two-mode (detector,
/// idler) for the EPR probe, single-mode for coherent and squeezed probes.
/// Custom probes have no Gaussian form.
GaussianState illumination_cm(const ScenarioParams& params, int hypothesis);

}  // namespace qillum::gauss
