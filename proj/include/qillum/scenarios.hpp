#pragma once

// Hypothesis pairs of the illumination task in Fock form, with Gaussian
// covariance sidecars when the probe is Gaussian.
//
// Mode layout: detector mode first, then the idler (EPR probe only).

#include "qillum/fock.hpp"
#include "qillum/gaussian.hpp"
#include "qillum/params.hpp"

#include <complex>
#include <functional>
#include <optional>

namespace qillum::scen {

/// Fock cutoffs for one build. probe_dim covers the probe and the idler,
/// detector_dim covers the environment and the detector output.
struct DimsPolicy {
  int probe_dim = 0;
  int detector_dim = 0;
  double trace_tol = 1e-3;

  DimsPolicy doubled() const { return {2 * probe_dim, 2 * detector_dim, trace_tol}; }
};

/// ceil(12 + 10 n) per mode group: the probe group uses nbar_probe (plus
/// sinh^2 r headroom for squeezed probes), the detector group the larger of
/// the detector output occupation and the rescaled environment.
DimsPolicy initial_dims(const ScenarioParams& params);

struct BuildOptions {
  /// Sign of the beam-splitter generator; -1 flips the reflected phase.
  double phase_sign = +1.0;
  /// Use the +lambda convention for the EPR amplitudes.
  bool epr_plus_sign = false;
};

struct EncodedPair {
  fock::FockState rho0;
  fock::FockState rho1;
  std::optional<gauss::GaussianState> gauss0;
  std::optional<gauss::GaussianState> gauss1;
  fock::TruncationSpec truncation;
  DimsPolicy dims;
  /// Weight dropped by the truncation before renormalization.
  double deficit0 = 0.0;
  double deficit1 = 0.0;

  bool has_idler() const { return rho0.num_modes() == 2; }
};

/// Probe state in Fock form for the single-mode probe kinds.
fock::FockState probe_state(const ScenarioParams& params, int dim);

EncodedPair build_pair(const ScenarioParams& params, const DimsPolicy& dims,
                       const BuildOptions& options = {});
EncodedPair build_pair(const ScenarioParams& params);

/// |n> -> (-1)^n |n> on one mode.
fock::FockState parity_flip(const fock::FockState& rho, int mode);

/// Heterodyne on the idler collapses the detector-side probe into the
/// coherent state -lambda beta*; the induced probe energy |alpha|^2 is
/// exponentially distributed with mean nbar.
struct CollapsedProbe {
  double nbar = 0.0;
  double lambda = 0.0;

  double energy_density(double energy) const;
  /// Heterodyne outcome density p(beta) of the idler over d^2 beta.
  double outcome_density(std::complex<double> beta) const;
  std::complex<double> amplitude(std::complex<double> beta) const;
};

CollapsedProbe collapsed_probe_distribution(const ScenarioParams& params);

/// Truncation refinement: evaluates f at the starting cutoffs and keeps
/// doubling them until successive values differ by less than tol.
struct Refined {
  double value = 0.0;
  double change = 0.0;
  DimsPolicy dims;
  bool converged = false;
};

Refined refine_truncation(const ScenarioParams& params,
                          const std::function<double(const EncodedPair&)>& f,
                          std::optional<DimsPolicy> start = std::nullopt, double tol = 1e-7,
                          int max_doublings = 3);

}  // namespace qillum::scen
