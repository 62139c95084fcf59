#include "qillum/params.hpp"

#include <cmath>

namespace qillum {

void ScenarioParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  if (!(nbar_probe >= 0.0) || !std::isfinite(nbar_probe)) throw DomainError("nbar_probe must be >= 0");
  if (!(nbar_env >= 0.0) || !std::isfinite(nbar_env)) throw DomainError("nbar_env must be >= 0");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("p0 must lie in [0, 1]");
  if (const auto* sq = std::get_if<SqueezedProbe>(&probe)) {
    const double s = std::sinh(sq->r);
    if (!(sq->r >= 0.0) || s * s > nbar_probe) {
      throw DomainError("squeezing r must satisfy 0 <= sinh^2 r <= nbar_probe");
    }
  }
  if (const auto* c = std::get_if<CustomProbe>(&probe)) {
    if (c->state.num_modes() != 1) throw DomainError("custom probe must be a single-mode state");
  }
}

std::string probe_name(const Probe& p) {
  struct {
    std::string operator()(const EprProbe&) const { return "epr"; }
    std::string operator()(const CoherentProbe&) const { return "coherent"; }
    std::string operator()(const SqueezedProbe&) const { return "squeezed"; }
    std::string operator()(const CustomProbe&) const { return "custom"; }
  } visitor;
  return std::visit(visitor, p);
}

}  // namespace qillum
