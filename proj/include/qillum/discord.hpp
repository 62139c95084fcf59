#pragma once

// Gaussian discord of the encoded state, Gaussian-measurement discord of the
// prior mixture, consumed discord and the check of the consumed-discord /
// quantum-advantage equality. Measurements act on the idler (mode 1); all
// values in bits.

#include "qillum/info.hpp"
#include "qillum/params.hpp"
#include "qillum/scenarios.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qillum::disc {

inline constexpr int kRadialNodes = 48;
inline constexpr double kTheoremTol = 5e-4;

/// Heterodyne discord of illumination_cm(params, 0).
double discord_encoded_state(const ScenarioParams& params);
/// Same state, minimized over the general-dyne family.
gauss::DiscordOptimum discord_encoded_state_opt(const ScenarioParams& params);

struct MixtureDiscord {
  double value = 0.0;
  int nodes = 0;
  double rel_change = 0.0;  ///< against the doubled radial rule (when checked)
  double max_weight_error = 0.0;  ///< max |w0 + w1 - 1| over the nodes
  double excluded_mass = 0.0;
};

/// Heterodyne discord of p0 rho0 + p1 rho1 on a fixed pair:
/// S_G(B) - S(rho) + int p(beta) S(rho_A|beta) d^2 beta, radial Gauss-Legendre.
MixtureDiscord discord_mixture(const scen::EncodedPair& pair, double p0, int radial_nodes = kRadialNodes,
                               bool check = false);

/// discord_mixture with truncation refinement and the doubled-rule check.
MixtureDiscord discord_mixture(const ScenarioParams& params, int radial_nodes = kRadialNodes);

/// Mixture discord for a general-dyne measurement with transmissivity t,
/// from the conditional ensemble of info::local_ensemble.
double discord_mixture_at(const scen::EncodedPair& pair, double p0, double t,
                          const info::LocalGrid& grid = {});

/// Entropy of the heterodyne conditional of the mixture at |beta| = r and
/// the given phase; the radial reduction relies on phase independence.
double conditional_mixture_entropy(const scen::EncodedPair& pair, double p0, double r, double phase);

struct DiscordReport {
  double discord_rho0 = 0.0;
  double discord_mixture = 0.0;
  double consumed = 0.0;  ///< p0 discord_rho0 - discord_mixture
  double loss = 0.0;  ///< p1 discord_rho0
  double optimal_measurement_t = 0.5;
  int quadrature_nodes = 0;

  /// |consumed + loss + discord_mixture - discord_rho0|
  double decomposition_residual() const;
};

DiscordReport consumed_discord(const ScenarioParams& params, int radial_nodes = kRadialNodes);

struct Theorem1Result {
  bool condition1 = false;  ///< equal idler marginals
  bool condition2 = false;  ///< hypothesis 1 is a product state
  bool condition3 = false;  ///< common optimal measurement
  bool equality = false;
  bool pass = false;
  std::string failure;  ///< first failed condition, empty on pass

  double consumed = 0.0;
  double chi_q = 0.0;
  double chi_c = 0.0;
  double residual = 0.0;  ///< |consumed - (chi_q - chi_c)|
  double t_chi_c = 0.0;  ///< argmax of chi_c(t) on the grid
  double t_mixture = 0.0;  ///< argmin of the mixture discord on the grid
  double t_rho0 = 0.0;  ///< argmin of the encoded-state discord on the grid
};

/// t grid used for condition 3: 0.30, 0.35, ..., 0.70.
std::vector<double> theorem1_t_grid();

/// Structural checks (conditions 1 and 2) on a pair, tolerance 1e-9.
bool same_idler_marginals(const scen::EncodedPair& pair, double tol = 1e-9);
bool hypothesis1_is_product(const scen::EncodedPair& pair, double tol = 1e-9);

/// Verifies the three conditions, then |consumed - (chi_q - chi_c)| <= tol.
/// When `pair` is given its structure is used for conditions 1 and 2 and a
/// failure there stops the check before the equality is evaluated.
Theorem1Result theorem1_check(const ScenarioParams& params, double tol = kTheoremTol,
                              const std::optional<scen::EncodedPair>& pair = std::nullopt);

}  // namespace qillum::disc
