#pragma once

// Information functionals of a hypothesis pair: Holevo information, POVM
// mutual information and the Fuchs-Caves lower and upper bounds on the
// accessible information, plus the local-measurement (heterodyne collapse and
// general-dyne) variants for the EPR probe. All values are in bits; p0 is the
// prior of hypothesis 0.

#include "qillum/fock.hpp"
#include "qillum/gaussian.hpp"
#include "qillum/params.hpp"
#include "qillum/scenarios.hpp"

#include <optional>
#include <vector>

namespace qillum::info {

inline constexpr double kSpectralFloor = 1e-12;  ///< relative to the largest eigenvalue
inline constexpr double kUpperRelTol = 1e-5;
inline constexpr int kDefaultUpperNodes = 21;
inline constexpr int kLaguerreNodes = 40;

struct InfoReport {
  double holevo = 0.0;
  double fuchs_lower = 0.0;
  double fuchs_upper = 0.0;
  double gap_rel = 0.0;  ///< (upper - lower) / max(lower, 1e-300)
  fock::TruncationSpec truncation;
  int quadrature_nodes = 0;
  double upper_change = 0.0;  ///< relative change of the upper bound at the last doubling
  double discarded_weight = 0.0;  ///< weight outside the positive support of L
  double truncation_change = 0.0;
  bool converged = true;
};

struct PovmDescription {
  std::vector<fock::Mat> elements;

  /// Completeness within 1e-9 and positivity of each element.
  void validate(fock::Index dim) const;
};

struct HolevoOptions {
  /// Use closed-form Gaussian entropies for the two hypothesis states when
  /// covariance sidecars exist. Off by default so that every term shares the
  /// same Fock truncation.
  bool gaussian_fast_path = false;
};

double holevo(const scen::EncodedPair& pair, double p0, const HolevoOptions& options = {});
double holevo(const fock::FockState& rho0, const fock::FockState& rho1, double p0);

double mutual_information_povm(const fock::FockState& rho0, const fock::FockState& rho1, double p0,
                               const PovmDescription& povm);

struct LowerBound {
  double value = 0.0;
  double discarded_weight = 0.0;
};
LowerBound fuchs_lower(const fock::FockState& rho0, const fock::FockState& rho1, double p0);

struct UpperBound {
  double value = 0.0;
  int nodes = 0;
  double rel_change = 0.0;
};
/// Double-quadrature solution of I'' = F, I(0) = I(1) = 0, evaluated at
/// p1 = 1 - p0. Starts at `nodes` (odd, >= 21) and doubles the grid until the
/// relative change drops below kUpperRelTol; throws ConvergenceError after
/// max_doublings.
UpperBound fuchs_upper(const fock::FockState& rho0, const fock::FockState& rho1, double p0,
                       int nodes = kDefaultUpperNodes, int max_doublings = 3);

/// F(p1) in bits: -sum_jk 2 |<j|D|k>|^2 / (l_j + l_k) / ln 2 over the
/// eigenbasis of (1 - p1) rho0 + p1 rho1, D = rho1 - rho0.
double fuchs_curvature(const fock::FockState& rho0, const fock::FockState& rho1, double p1);

InfoReport info_report(const scen::EncodedPair& pair, double p0, int nodes = kDefaultUpperNodes);

/// info_report with truncation refinement: cutoffs double until holevo and
/// both bounds change by less than tol.
InfoReport info_report_refined(const ScenarioParams& params, int nodes = kDefaultUpperNodes,
                               std::optional<scen::DimsPolicy> start = std::nullopt,
                               double tol = 1e-7);

enum class Quantity { Holevo, FuchsLower, FuchsUpper };

struct Integrated {
  double holevo = 0.0;
  double fuchs_lower = 0.0;
  double fuchs_upper = 0.0;
  int nodes = 0;  ///< Laguerre nodes actually evaluated
  double rel_change = 0.0;  ///< relative change of holevo against the doubled rule
  bool converged = true;
};

/// Heterodyne collapse of the EPR probe: integrates single coherent-probe
/// quantities against the exponential energy distribution with Gauss-Laguerre.
/// With `check` the rule is doubled and compared.
Integrated integrated_local_info(const ScenarioParams& params, bool with_bounds, bool check = false,
                                 int nodes = kLaguerreNodes);
double integrated_local_info(const ScenarioParams& params, Quantity quantity);

/// Coherent-probe quantities at the given energy (same eps, n_env, priors).
InfoReport single_probe_report(const ScenarioParams& params, double energy, bool with_bounds);

// ---------------------------------------------------------------------------
// General-dyne measurement on the idler

/// Outcome grid of a general-dyne measurement of the idler with the
/// entropies of the conditional detector states. Nodes cover one quadrant;
/// weights include the reflection-symmetry factor and the outcome density.
struct LocalNode {
  double weight = 0.0;
  double entropy0 = 0.0;  ///< conditional detector state, hypothesis 0
  double entropy_mix = 0.0;  ///< conditional detector state of the prior mixture
};

struct LocalEnsemble {
  double t = 0.5;
  std::vector<LocalNode> nodes;
  double entropy1 = 0.0;  ///< hypothesis 1 conditional (outcome independent)
  double total_weight = 0.0;
};

struct LocalGrid {
  int radial = 48;
  int angular = 8;  ///< per quadrant; ignored at t = 1/2
};

/// Builds the conditional ensemble from Fock projections of the pair onto
/// squeezed coherent kets of the idler.
LocalEnsemble local_ensemble(const scen::EncodedPair& pair, double p0, double t,
                             const LocalGrid& grid = {});

/// int p(beta) chi(rho0|beta, rho1|beta) d^2 beta.
double local_holevo(const LocalEnsemble& e, double p0);

}  // namespace qillum::info
