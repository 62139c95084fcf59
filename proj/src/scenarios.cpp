#include "qillum/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qillum::scen {
namespace {

int cutoff_for(double nbar) { return static_cast<int>(std::ceil(12.0 + 10.0 * nbar)); }

// Mean photon number of the probe; custom probes are checked against it.
constexpr double kEnergyTol = 1e-9;

}  // namespace

DimsPolicy initial_dims(const ScenarioParams& params) {
  params.validate();
  double probe_n = params.nbar_probe;
  if (const auto* sq = std::get_if<SqueezedProbe>(&params.probe)) {
    const double s = std::sinh(sq->r);
    probe_n += 4.0 * s * s;
  }
  DimsPolicy d;
  d.probe_dim = cutoff_for(probe_n);
  if (params.has_idler()) {
    // The idler is thermal; extend until the renormalized mean photon number is
    // within the energy tolerance: q^d (d + 1/(1-q)) bounds its error.
    const double q = params.nbar_probe / (params.nbar_probe + 1.0);
    while (std::pow(q, d.probe_dim) * (d.probe_dim + params.nbar_probe + 1.0) > 0.01 * kEnergyTol) ++d.probe_dim;
  }
  if (const auto* c = std::get_if<CustomProbe>(&params.probe)) d.probe_dim = c->state.dims().dims[0];
  // The detector output carries eps * nbar + nbar_env photons; the explicit
  // environment mode carries the rescaled occupation.
  d.detector_dim = cutoff_for(std::max(params.epsilon * params.nbar_probe + params.nbar_env, params.rescaled_env()));
  return d;
}

fock::FockState probe_state(const ScenarioParams& params, int dim) {
  const double n = params.nbar_probe;
  return std::visit(
      [&](const auto& p) -> fock::FockState {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CoherentProbe>) {
          return fock::coherent_state(std::sqrt(n), dim, 1.0 - 1e-12, true);
        } else if constexpr (std::is_same_v<T, SqueezedProbe>) {
          const double s = std::sinh(p.r);
          return fock::squeezed_coherent_state(p.r, std::sqrt(std::max(0.0, n - s * s)), dim, 1.0 - 1e-12, true);
        } else if constexpr (std::is_same_v<T, CustomProbe>) {
          return p.state.normalized();
        } else {
          throw DomainError("probe_state: the EPR probe is a two-mode state");
        }
      },
      params.probe);
}

fock::FockState parity_flip(const fock::FockState& rho, int mode) {
  const auto& spec = rho.dims();
  if (mode < 0 || mode >= spec.num_modes()) throw DomainError("parity_flip: invalid mode");
  const fock::Index stride = spec.stride(mode);
  const int d = spec.dims[static_cast<std::size_t>(mode)];
  std::vector<fock::FockState::Block> blocks;
  for (const auto& b : rho.blocks()) {
    fock::FockState::Block out = b;
    for (std::size_t c = 0; c < b.basis.size(); ++c) {
      for (std::size_t r = 0; r < b.basis.size(); ++r) {
        const auto nr = (b.basis[r] / stride) % d;
        const auto nc = (b.basis[c] / stride) % d;
        if ((nr + nc) % 2 != 0) out.m(static_cast<fock::Index>(r), static_cast<fock::Index>(c)) *= -1.0;
      }
    }
    blocks.push_back(std::move(out));
  }
  return fock::FockState(spec, std::move(blocks), rho.truncation_deficit(), rho.is_pure_hint());
}

EncodedPair build_pair(const ScenarioParams& params, const DimsPolicy& dims, const BuildOptions& options) {
  params.validate();
  if (dims.probe_dim < 2 || dims.detector_dim < 2) throw DomainError("build_pair: cutoffs must be >= 2");
  EncodedPair pair;
  pair.dims = dims;

  if (params.has_idler()) {
    auto epr = fock::epr_state(params.nbar_probe, dims.probe_dim, dims.trace_tol);
    const double epr_deficit = epr.truncation_deficit();
    epr = epr.normalized();
    if (options.epr_plus_sign) epr = parity_flip(epr, 1);
    const auto raw0 = fock::thermal_attenuator(epr, 0, params.epsilon, params.rescaled_env(), dims.detector_dim,
                                               dims.trace_tol, options.phase_sign);
    pair.deficit0 = epr_deficit + raw0.truncation_deficit();
    pair.rho0 = raw0.normalized();
    const std::vector<int> keep_idler{1};
    const auto idler = fock::partial_trace(pair.rho0, keep_idler);
    auto env = fock::thermal_state(params.nbar_env, dims.detector_dim, dims.trace_tol);
    pair.deficit1 = env.truncation_deficit();
    pair.rho1 = fock::tensor(env.normalized(), idler);
  } else {
    fock::FockState probe;
    if (const auto* c = std::get_if<CustomProbe>(&params.probe)) {
      probe = c->state.normalized();
      const double n = probe.mean_photon(0);
      if (std::abs(n - params.nbar_probe) > kEnergyTol) {
        std::ostringstream os;
        os << "build_pair: custom probe carries " << n << " photons, expected " << params.nbar_probe;
        throw DomainError(os.str());
      }
    } else {
      probe = probe_state(params, dims.probe_dim);
    }
    const auto raw0 = fock::thermal_attenuator(probe, 0, params.epsilon, params.rescaled_env(), dims.detector_dim,
                                               dims.trace_tol, options.phase_sign);
    pair.deficit0 = probe.truncation_deficit() + raw0.truncation_deficit();
    pair.rho0 = raw0.normalized();
    auto env = fock::thermal_state(params.nbar_env, dims.detector_dim, dims.trace_tol);
    pair.deficit1 = env.truncation_deficit();
    pair.rho1 = env.normalized();
  }
  pair.truncation = pair.rho0.dims();
  if (!std::holds_alternative<CustomProbe>(params.probe)) {
    pair.gauss0 = gauss::illumination_cm(params, 0);
    pair.gauss1 = gauss::illumination_cm(params, 1);
  }
  return pair;
}

EncodedPair build_pair(const ScenarioParams& params) { return build_pair(params, initial_dims(params)); }

double CollapsedProbe::energy_density(double energy) const {
  if (energy < 0.0) return 0.0;
  return std::exp(-energy / nbar) / nbar;
}

double CollapsedProbe::outcome_density(std::complex<double> beta) const {
  return std::exp(-std::norm(beta) / (nbar + 1.0)) / (std::numbers::pi * (nbar + 1.0));
}

std::complex<double> CollapsedProbe::amplitude(std::complex<double> beta) const {
  return -lambda * std::conj(beta);
}

CollapsedProbe collapsed_probe_distribution(const ScenarioParams& params) {
  params.validate();
  if (!params.has_idler()) throw DomainError("collapsed_probe_distribution: EPR probe required");
  const double n = params.nbar_probe;
  return {n, std::sqrt(n / (n + 1.0))};
}

Refined refine_truncation(const ScenarioParams& params, const std::function<double(const EncodedPair&)>& f,
                          std::optional<DimsPolicy> start, double tol, int max_doublings) {
  Refined out;
  out.dims = start.value_or(initial_dims(params));
  const bool custom = std::holds_alternative<CustomProbe>(params.probe);
  out.value = f(build_pair(params, out.dims));
  for (int k = 0; k < max_doublings; ++k) {
    DimsPolicy next = out.dims.doubled();
    if (custom) next.probe_dim = out.dims.probe_dim;
    const double v = f(build_pair(params, next));
    out.change = std::abs(v - out.value);
    out.value = v;
    out.dims = next;
    if (out.change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace qillum::scen
