#pragma once

// Illumination configuration shared by the scenario builders, the Gaussian
// fast paths and the experiment runner.

#include "qillum/fock.hpp"

#include <string>
#include <variant>

namespace qillum {

struct EprProbe {};
struct CoherentProbe {};
/// Squeezed coherent probe; the displacement sqrt(nbar - sinh^2 r) is derived.
struct SqueezedProbe {
  double r = 0.0;
};
/// Arbitrary single-mode probe state; its mean photon number must equal nbar_probe.
struct CustomProbe {
  fock::FockState state;
};

using Probe = std::variant<EprProbe, CoherentProbe, SqueezedProbe, CustomProbe>;

struct ScenarioParams {
  double epsilon = 0.1;
  double nbar_probe = 0.5;
  double nbar_env = 4.0;
  double p0 = 0.5;
  Probe probe = EprProbe{};

  double p1() const noexcept { return 1.0 - p0; }
  /// Environment photons entering the beam splitter, n_env / (1 - eps).
  double rescaled_env() const { return nbar_env / (1.0 - epsilon); }
  bool has_idler() const noexcept { return std::holds_alternative<EprProbe>(probe); }

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

std::string probe_name(const Probe& p);

}  // namespace qillum
