#include "qillum/discord.hpp"

#include "qillum/gaussian.hpp"
#include "qillum/parallel.hpp"
#include "qillum/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qillum::disc {
namespace {

constexpr double kExcludedMass = 1e-8;
constexpr double kFlatTol = 1e-12;

void require_idler(const ScenarioParams& params) {
  params.validate();
  if (!params.has_idler()) throw DomainError("discord: the EPR probe is required");
}

double max_abs_diff(const fock::FockState& a, const fock::FockState& b) {
  return (a.to_dense() - b.to_dense()).cwiseAbs().maxCoeff();
}

// S_G of the idler marginal: Gaussian sidecar when present, else Fock moments.
double idler_gaussian_entropy(const scen::EncodedPair& pair) {
  if (pair.gauss0) return gauss::gaussian_entropy(pair.gauss0->reduced(1));
  const std::vector<int> keep{1};
  return gauss::gaussian_entropy(gauss::moments_from_fock(fock::partial_trace(pair.rho0, keep)));
}

struct RadialSum {
  double integral = 0.0;
  double mass = 0.0;
  double max_weight_error = 0.0;
};

RadialSum radial_conditional_entropy(const scen::EncodedPair& pair, double p0, int nodes, double rmax) {
  const auto rule = quad::gauss_legendre(nodes, 0.0, rmax);
  struct Node {
    double weight = 0.0;
    double entropy = 0.0;
    double weight_error = 0.0;
  };
  const auto values = parallel_map<Node>(rule.nodes.size(), [&](std::size_t k) {
    const double r = rule.nodes[k];
    // Beyond the idler cutoff the pair has no support, so the ket may be truncated.
    const auto c0 = fock::project_coherent(pair.rho0, 1, r, 1.0);
    const auto c1 = fock::project_coherent(pair.rho1, 1, r, 1.0);
    const double p1 = 1.0 - p0;
    const double density = p0 * c0.density + p1 * c1.density;
    Node n;
    if (density <= 0.0) return n;
    const double w0 = p0 * c0.density / density;
    const double w1 = p1 * c1.density / density;
    n.weight_error = std::abs(w0 + w1 - 1.0);
    fock::FockState cond;
    if (w1 == 0.0) {
      cond = c0.state.normalized();
    } else if (w0 == 0.0) {
      cond = c1.state.normalized();
    } else {
      cond = fock::mix(c0.state.normalized(), c1.state.normalized(), w0);
    }
    n.weight = rule.weights[k] * 2.0 * std::numbers::pi * r * density;
    n.entropy = fock::von_neumann_entropy(cond);
    return n;
  });
  RadialSum out;
  for (const auto& n : values) {
    out.integral += n.weight * n.entropy;
    out.mass += n.weight;
    out.max_weight_error = std::max(out.max_weight_error, n.weight_error);
  }
  return out;
}

// Indices of grid values within kFlatTol of the optimum.
std::vector<std::size_t> optimal_set(const std::vector<double>& v, bool maximize) {
  const double best = maximize ? *std::max_element(v.begin(), v.end()) : *std::min_element(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i] - best) <= kFlatTol * std::max(1.0, std::abs(best))) out.push_back(i);
  }
  return out;
}

}  // namespace

double discord_encoded_state(const ScenarioParams& params) {
  require_idler(params);
  return gauss::gaussian_discord(gauss::illumination_cm(params, 0), gauss::GeneralDyne(0.5));
}

gauss::DiscordOptimum discord_encoded_state_opt(const ScenarioParams& params) {
  require_idler(params);
  return gauss::gaussian_discord_opt(gauss::illumination_cm(params, 0));
}

MixtureDiscord discord_mixture(const scen::EncodedPair& pair, double p0, int radial_nodes, bool check) {
  if (!pair.has_idler()) throw DomainError("discord_mixture: pair has no idler");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("discord_mixture: p0 must lie in [0, 1]");
  if (radial_nodes < 2) throw DomainError("discord_mixture: need at least 2 radial nodes");
  const auto mixture = fock::mix(pair.rho0, pair.rho1, p0);
  const double base = idler_gaussian_entropy(pair) - fock::von_neumann_entropy(mixture);
  // Heterodyne outcomes on a thermal idler: mass beyond rmax is exp(-rmax^2 / (n + 1)).
  const std::vector<int> keep{1};
  const double n_idler = fock::partial_trace(pair.rho0, keep).mean_photon(0);
  const double rmax = std::sqrt((n_idler + 1.0) * std::log(1.0 / kExcludedMass));

  MixtureDiscord out;
  const auto sum = radial_conditional_entropy(pair, p0, radial_nodes, rmax);
  out.value = base + sum.integral;
  out.nodes = radial_nodes;
  out.max_weight_error = sum.max_weight_error;
  out.excluded_mass = 1.0 - sum.mass;
  if (check) {
    const auto fine = radial_conditional_entropy(pair, p0, 2 * radial_nodes, rmax);
    const double v = base + fine.integral;
    out.rel_change = std::abs(v - out.value) / std::max(std::abs(v), 1e-300);
  }
  return out;
}

MixtureDiscord discord_mixture(const ScenarioParams& params, int radial_nodes) {
  require_idler(params);
  const auto refined = scen::refine_truncation(params, [&](const scen::EncodedPair& pair) {
    return discord_mixture(pair, params.p0, radial_nodes).value;
  });
  if (!refined.converged) {
    throw ConvergenceError("discord_mixture: truncation refinement did not converge", refined.change);
  }
  return discord_mixture(scen::build_pair(params, refined.dims), params.p0, radial_nodes, true);
}

double discord_mixture_at(const scen::EncodedPair& pair, double p0, double t, const info::LocalGrid& grid) {
  const auto e = info::local_ensemble(pair, p0, t, grid);
  double integral = 0.0;
  for (const auto& n : e.nodes) integral += n.weight * n.entropy_mix;
  return idler_gaussian_entropy(pair) - fock::von_neumann_entropy(fock::mix(pair.rho0, pair.rho1, p0)) + integral;
}

double conditional_mixture_entropy(const scen::EncodedPair& pair, double p0, double r, double phase) {
  const auto beta = std::polar(r, phase);
  const auto c0 = fock::project_coherent(pair.rho0, 1, beta, 1.0);
  const auto c1 = fock::project_coherent(pair.rho1, 1, beta, 1.0);
  const double density = p0 * c0.density + (1.0 - p0) * c1.density;
  const double w0 = p0 * c0.density / density;
  return fock::von_neumann_entropy(fock::mix(c0.state.normalized(), c1.state.normalized(), w0));
}

double DiscordReport::decomposition_residual() const {
  return std::abs(consumed + loss + discord_mixture - discord_rho0);
}

DiscordReport consumed_discord(const ScenarioParams& params, int radial_nodes) {
  require_idler(params);
  DiscordReport r;
  r.discord_rho0 = discord_encoded_state(params);
  const auto mixture = discord_mixture(params, radial_nodes);
  r.discord_mixture = mixture.value;
  r.quadrature_nodes = mixture.nodes;
  r.consumed = params.p0 * r.discord_rho0 - r.discord_mixture;
  r.loss = params.p1() * r.discord_rho0;
  r.optimal_measurement_t = discord_encoded_state_opt(params).t;
  return r;
}

std::vector<double> theorem1_t_grid() {
  std::vector<double> t;
  for (int k = 0; k <= 8; ++k) t.push_back(0.30 + 0.05 * k);
  return t;
}

bool same_idler_marginals(const scen::EncodedPair& pair, double tol) {
  const std::vector<int> keep{1};
  return max_abs_diff(fock::partial_trace(pair.rho0, keep), fock::partial_trace(pair.rho1, keep)) <= tol;
}

bool hypothesis1_is_product(const scen::EncodedPair& pair, double tol) {
  const std::vector<int> detector{0};
  const std::vector<int> idler{1};
  const auto product = fock::tensor(fock::partial_trace(pair.rho1, detector), fock::partial_trace(pair.rho1, idler));
  return max_abs_diff(pair.rho1, product) <= tol;
}

Theorem1Result theorem1_check(const ScenarioParams& params, double tol, const std::optional<scen::EncodedPair>& pair_in) {
  require_idler(params);
  Theorem1Result res;
  const scen::EncodedPair pair = pair_in ? *pair_in : scen::build_pair(params);
  res.condition1 = same_idler_marginals(pair);
  if (!res.condition1) {
    res.failure = "condition 1: the idler marginals differ between the hypotheses";
    return res;
  }
  res.condition2 = hypothesis1_is_product(pair);
  if (!res.condition2) {
    res.failure = "condition 2: hypothesis 1 is not a product state";
    return res;
  }

  const auto grid = theorem1_t_grid();
  const auto cm0 = gauss::illumination_cm(params, 0);
  std::vector<double> chi_c(grid.size());
  std::vector<double> mixture(grid.size());
  std::vector<double> rho0(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto e = info::local_ensemble(pair, params.p0, grid[k]);
    chi_c[k] = info::local_holevo(e, params.p0);
    mixture[k] = discord_mixture_at(pair, params.p0, grid[k]);
    rho0[k] = gauss::gaussian_discord(cm0, gauss::GeneralDyne(grid[k]));
  }
  const auto best_chi = optimal_set(chi_c, true);
  const auto best_mix = optimal_set(mixture, false);
  const auto best_rho = optimal_set(rho0, false);
  res.t_chi_c = grid[best_chi.front()];
  res.t_mixture = grid[best_mix.front()];
  res.t_rho0 = grid[best_rho.front()];
  for (auto i : best_chi) {
    const bool in_mix = std::find(best_mix.begin(), best_mix.end(), i) != best_mix.end();
    const bool in_rho = std::find(best_rho.begin(), best_rho.end(), i) != best_rho.end();
    if (in_mix && in_rho) {
      res.condition3 = true;
      res.t_chi_c = res.t_mixture = res.t_rho0 = grid[i];
      break;
    }
  }
  if (!res.condition3) {
    res.failure = "condition 3: the optimal measurements differ";
    return res;
  }

  const auto chi_q = scen::refine_truncation(params, [&](const scen::EncodedPair& p) { return info::holevo(p, params.p0); });
  res.chi_q = chi_q.value;
  res.chi_c = info::integrated_local_info(params, false).holevo;
  res.consumed = consumed_discord(params).consumed;
  res.residual = std::abs(res.consumed - (res.chi_q - res.chi_c));
  res.equality = res.residual <= tol;
  res.pass = res.equality;
  if (!res.equality) res.failure = "equality: consumed discord differs from the quantum advantage";
  return res;
}

}  // namespace qillum::disc
