#include "qillum/info.hpp"

#include "qillum/parallel.hpp"
#include "qillum/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace qillum::info {
namespace {

using fock::FockState;
using fock::Index;
using fock::Mat;

constexpr double kLSupportFloor = 1e-12;
constexpr double kLaguerreWeightFloor = 1e-16;
constexpr double kNegligibleWeight = 1e-10;

void check_prior(double p0) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("prior p0 must lie in [0, 1]");
}

void check_same_space(const FockState& a, const FockState& b) {
  if (a.dims().dims != b.dims().dims) throw DomainError("hypothesis states live on different spaces");
}

struct BlockEig {
  Eigen::VectorXd values;
  Mat vectors;
};

BlockEig eig(const Mat& m) {
  if (m.rows() == 1) return {Eigen::VectorXd::Constant(1, m(0, 0).real()), Mat::Identity(1, 1)};
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  return {es.eigenvalues(), es.eigenvectors()};
}

// Curvature of the upper bound on precomputed joint blocks.
double curvature(const std::vector<fock::JointBlock>& blocks, double p1) {
  std::vector<BlockEig> eigs;
  eigs.reserve(blocks.size());
  double lmax = 0.0;
  for (const auto& b : blocks) {
    eigs.push_back(eig((1.0 - p1) * b.a + p1 * b.b));
    lmax = std::max(lmax, eigs.back().values.maxCoeff());
  }
  const double floor = kSpectralFloor * lmax;
  double sum = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& e = eigs[k];
    const Mat d = e.vectors.adjoint() * (blocks[k].b - blocks[k].a) * e.vectors;
    const auto n = e.values.size();
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < n; ++r) {
        const double s = e.values[r] + e.values[c];
        if (s > floor) sum += 2.0 * std::norm(d(r, c)) / s;
      }
    }
  }
  return -sum / std::numbers::ln2;
}

// Simpson rule in u on [0, 1] mapped to [a, b] by s = a + (b - a)(1 - cos pi u)/2.
// Nodes cluster at both ends, where F varies on the scale of the smallest
// eigenvalues; the mapped end weights vanish. u = k / (n - 1) is exact for
// nested grids, so node values repeat bit for bit under doubling.
quad::Rule mapped_simpson(int n, double a, double b) {
  const auto base = quad::simpson(n, 0.0, 1.0);
  quad::Rule r;
  for (int k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    const double w = base.weights[static_cast<std::size_t>(k)] * (b - a) * 0.5 * std::numbers::pi *
                     std::sin(std::numbers::pi * u);
    if (w <= 0.0) continue;
    r.nodes.push_back(a + (b - a) * 0.5 * (1.0 - std::cos(std::numbers::pi * u)));
    r.weights.push_back(w);
  }
  return r;
}

// I(p) = -(1 - p) int_0^p s F ds - p int_p^1 (1 - s) F ds, the Green's
// function solution of I'' = F with I(0) = I(1) = 0.
double upper_at(const std::function<double(double)>& f, double p, int per_side) {
  double j1 = 0.0;
  double j2 = 0.0;
  const auto left = mapped_simpson(per_side, 0.0, p);
  for (std::size_t k = 0; k < left.nodes.size(); ++k) j1 += left.weights[k] * left.nodes[k] * f(left.nodes[k]);
  const auto right = mapped_simpson(per_side, p, 1.0);
  for (std::size_t k = 0; k < right.nodes.size(); ++k) {
    j2 += right.weights[k] * (1.0 - right.nodes[k]) * f(right.nodes[k]);
  }
  return -(1.0 - p) * j1 - p * j2;
}

int per_side_nodes(int nodes) {
  int m = (nodes + 1) / 2;
  if (m % 2 == 0) ++m;
  return std::max(m, 3);
}

}  // namespace

void PovmDescription::validate(Index dim) const {
  if (elements.empty()) throw DomainError("POVM has no elements");
  Mat sum = Mat::Zero(dim, dim);
  for (const auto& e : elements) {
    if (e.rows() != dim || e.cols() != dim) throw DomainError("POVM element has the wrong dimension");
    if ((e - e.adjoint()).cwiseAbs().maxCoeff() > 1e-9) throw DomainError("POVM element is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(e, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw DomainError("POVM element is not positive");
    sum += e;
  }
  if ((sum - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-9) {
    throw DomainError("POVM elements do not sum to the identity");
  }
}

double holevo(const FockState& rho0, const FockState& rho1, double p0) {
  check_prior(p0);
  check_same_space(rho0, rho1);
  if (p0 == 0.0 || p0 == 1.0) return 0.0;
  const double p1 = 1.0 - p0;
  return fock::von_neumann_entropy(fock::mix(rho0, rho1, p0)) - p0 * fock::von_neumann_entropy(rho0) -
         p1 * fock::von_neumann_entropy(rho1);
}

double holevo(const scen::EncodedPair& pair, double p0, const HolevoOptions& options) {
  if (!options.gaussian_fast_path || !pair.gauss0 || !pair.gauss1) return holevo(pair.rho0, pair.rho1, p0);
  check_prior(p0);
  if (p0 == 0.0 || p0 == 1.0) return 0.0;
  return fock::von_neumann_entropy(fock::mix(pair.rho0, pair.rho1, p0)) -
         p0 * gauss::gaussian_entropy(*pair.gauss0) - (1.0 - p0) * gauss::gaussian_entropy(*pair.gauss1);
}

double mutual_information_povm(const FockState& rho0, const FockState& rho1, double p0,
                               const PovmDescription& povm) {
  check_prior(p0);
  check_same_space(rho0, rho1);
  povm.validate(rho0.dim());
  const Mat d0 = rho0.to_dense();
  const Mat d1 = rho1.to_dense();
  const double p1 = 1.0 - p0;
  double total = 0.0;
  for (const auto& e : povm.elements) {
    const double q0 = std::max(0.0, (e * d0).trace().real());
    const double q1 = std::max(0.0, (e * d1).trace().real());
    const double q = p0 * q0 + p1 * q1;
    if (q <= 0.0) continue;
    if (p0 > 0.0 && q0 > 0.0) total += p0 * q0 * std::log2(q0 / q);
    if (p1 > 0.0 && q1 > 0.0) total += p1 * q1 * std::log2(q1 / q);
  }
  return total;
}

LowerBound fuchs_lower(const FockState& rho0, const FockState& rho1, double p0) {
  check_prior(p0);
  check_same_space(rho0, rho1);
  LowerBound out;
  if (p0 == 0.0 || p0 == 1.0) return out;
  const double p1 = 1.0 - p0;
  const auto blocks = fock::joint_blocks(rho0, rho1);
  std::vector<BlockEig> eigs;
  eigs.reserve(blocks.size());
  double lmax = 0.0;
  for (const auto& b : blocks) {
    eigs.push_back(eig(p0 * b.a + p1 * b.b));
    lmax = std::max(lmax, eigs.back().values.maxCoeff());
  }
  const double floor = kSpectralFloor * lmax;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& e = eigs[k];
    const auto n = e.values.size();
    for (int x = 0; x < 2; ++x) {
      const double px = x == 0 ? p0 : p1;
      const Mat xm = e.vectors.adjoint() * (x == 0 ? blocks[k].a : blocks[k].b) * e.vectors;
      Mat l = Mat::Zero(n, n);
      for (Index c = 0; c < n; ++c) {
        for (Index r = 0; r < n; ++r) {
          const double s = e.values[r] + e.values[c];
          if (s > floor) l(r, c) = 2.0 * xm(r, c) / s;
        }
      }
      l = (0.5 * (l + l.adjoint())).eval();
      const BlockEig le = eig(l);
      const double lscale = std::max(1.0, le.values.cwiseAbs().maxCoeff());
      const Mat y = le.vectors.adjoint() * xm * le.vectors;
      for (Index m = 0; m < n; ++m) {
        const double ym = y(m, m).real();
        // Rounding in the near-null space of the mixture can push L slightly
        // negative there; such directions carry no weight.
        if (le.values[m] < -1e-8 * lscale && ym > kNegligibleWeight) {
          std::ostringstream os;
          os << "fuchs_lower: lowering superoperator has eigenvalue " << le.values[m] << " with weight " << ym;
          throw DomainError(os.str());
        }
        if (le.values[m] > kLSupportFloor) {
          out.value += px * ym * std::log2(le.values[m]);
        } else {
          out.discarded_weight += px * ym;
        }
      }
    }
  }
  return out;
}

double fuchs_curvature(const FockState& rho0, const FockState& rho1, double p1) {
  check_same_space(rho0, rho1);
  return curvature(fock::joint_blocks(rho0, rho1), p1);
}

UpperBound fuchs_upper(const FockState& rho0, const FockState& rho1, double p0, int nodes, int max_doublings) {
  check_prior(p0);
  check_same_space(rho0, rho1);
  if (nodes < 21 || nodes % 2 == 0) throw DomainError("fuchs_upper: node count must be odd and >= 21");
  UpperBound out;
  out.nodes = nodes;
  const double p = 1.0 - p0;
  if (p == 0.0 || p == 1.0) return out;
  const auto blocks = fock::joint_blocks(rho0, rho1);
  std::map<double, double> cache;
  auto evaluate = [&](int per_side) {
    // Precompute missing nodes in parallel, then integrate from the cache.
    std::vector<double> missing;
    for (const auto& rule : {mapped_simpson(per_side, 0.0, p), mapped_simpson(per_side, p, 1.0)}) {
      for (double s : rule.nodes) {
        if (!cache.contains(s)) missing.push_back(s);
      }
    }
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    const auto values = parallel_map<double>(missing.size(), [&](std::size_t i) { return curvature(blocks, missing[i]); });
    for (std::size_t i = 0; i < missing.size(); ++i) cache[missing[i]] = values[i];
    return upper_at([&](double s) { return cache.at(s); }, p, per_side);
  };
  int per_side = per_side_nodes(nodes);
  double value = evaluate(per_side);
  for (int k = 0; k < max_doublings; ++k) {
    const int finer = 2 * per_side - 1;
    const double v = evaluate(finer);
    out.rel_change = std::abs(v - value) / std::max(std::abs(v), 1e-300);
    value = v;
    per_side = finer;
    out.nodes = 2 * per_side - 1;
    if (out.rel_change < kUpperRelTol || std::abs(v) < 1e-14) {
      out.value = value;
      return out;
    }
  }
  std::ostringstream os;
  os << "fuchs_upper: relative change " << out.rel_change << " after " << out.nodes << " nodes";
  throw ConvergenceError(os.str(), out.rel_change);
}

InfoReport info_report(const scen::EncodedPair& pair, double p0, int nodes) {
  InfoReport r;
  r.holevo = holevo(pair, p0);
  const auto lower = fuchs_lower(pair.rho0, pair.rho1, p0);
  r.fuchs_lower = lower.value;
  r.discarded_weight = lower.discarded_weight;
  const auto upper = fuchs_upper(pair.rho0, pair.rho1, p0, nodes);
  r.fuchs_upper = upper.value;
  r.quadrature_nodes = upper.nodes;
  r.upper_change = upper.rel_change;
  r.gap_rel = (r.fuchs_upper - r.fuchs_lower) / std::max(r.fuchs_lower, 1e-300);
  r.truncation = pair.truncation;
  return r;
}

// Cutoffs are chosen on the Holevo information, the cheapest of the three
// quantities: doubling stops once it changes by less than tol, and the
// report is evaluated at the coarser cutoff of the final pair.
InfoReport info_report_refined(const ScenarioParams& params, int nodes, std::optional<scen::DimsPolicy> start,
                               double tol) {
  scen::DimsPolicy dims = start.value_or(scen::initial_dims(params));
  const bool custom = std::holds_alternative<CustomProbe>(params.probe);
  double prev = holevo(scen::build_pair(params, dims), params.p0);
  double change = 0.0;
  bool converged = false;
  constexpr int kMaxDoublings = 3;
  for (int k = 0; k < kMaxDoublings; ++k) {
    scen::DimsPolicy next = dims.doubled();
    if (custom) next.probe_dim = dims.probe_dim;
    const double cur = holevo(scen::build_pair(params, next), params.p0);
    change = std::abs(cur - prev);
    if (change < tol) {
      converged = true;
      break;
    }
    dims = next;
    prev = cur;
  }
  InfoReport r = info_report(scen::build_pair(params, dims), params.p0, nodes);
  r.truncation_change = change;
  r.converged = converged;
  return r;
}

InfoReport single_probe_report(const ScenarioParams& params, double energy, bool with_bounds) {
  ScenarioParams q = params;
  q.probe = CoherentProbe{};
  q.nbar_probe = energy;
  if (with_bounds) return info_report_refined(q);
  const auto refined = scen::refine_truncation(q, [&](const scen::EncodedPair& pair) { return holevo(pair, q.p0); });
  InfoReport r;
  r.holevo = refined.value;
  r.truncation_change = refined.change;
  r.converged = refined.converged;
  r.truncation = fock::TruncationSpec({refined.dims.detector_dim});
  return r;
}

namespace {

Integrated integrate_laguerre(const ScenarioParams& params, bool with_bounds, int nodes) {
  Integrated out;
  const double n = params.nbar_probe;
  if (n == 0.0) return out;
  const auto rule = quad::gauss_laguerre(nodes);
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    if (rule.weights[k] >= kLaguerreWeightFloor) used.push_back(k);
  }
  const auto reports = parallel_map<InfoReport>(used.size(), [&](std::size_t i) {
    return single_probe_report(params, n * rule.nodes[used[i]], with_bounds);
  });
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double w = rule.weights[used[i]];
    out.holevo += w * reports[i].holevo;
    out.fuchs_lower += w * reports[i].fuchs_lower;
    out.fuchs_upper += w * reports[i].fuchs_upper;
    out.converged = out.converged && reports[i].converged;
  }
  out.nodes = static_cast<int>(used.size());
  return out;
}

}  // namespace

Integrated integrated_local_info(const ScenarioParams& params, bool with_bounds, bool check, int nodes) {
  params.validate();
  if (!params.has_idler()) throw DomainError("integrated_local_info: EPR probe required");
  Integrated out = integrate_laguerre(params, with_bounds, nodes);
  if (check && params.nbar_probe > 0.0) {
    const Integrated fine = integrate_laguerre(params, with_bounds, 2 * nodes);
    out.rel_change = std::abs(fine.holevo - out.holevo) / std::max(std::abs(fine.holevo), 1e-300);
    if (with_bounds) {
      out.rel_change = std::max({out.rel_change,
                                 std::abs(fine.fuchs_lower - out.fuchs_lower) / std::max(std::abs(fine.fuchs_lower), 1e-300),
                                 std::abs(fine.fuchs_upper - out.fuchs_upper) / std::max(std::abs(fine.fuchs_upper), 1e-300)});
    }
    out.converged = out.converged && fine.converged && out.rel_change < 1e-6;
  }
  return out;
}

double integrated_local_info(const ScenarioParams& params, Quantity quantity) {
  const auto r = integrated_local_info(params, quantity != Quantity::Holevo);
  switch (quantity) {
    case Quantity::Holevo: return r.holevo;
    case Quantity::FuchsLower: return r.fuchs_lower;
    case Quantity::FuchsUpper: return r.fuchs_upper;
  }
  return r.holevo;
}

// ---------------------------------------------------------------------------

LocalEnsemble local_ensemble(const scen::EncodedPair& pair, double p0, double t, const LocalGrid& grid) {
  check_prior(p0);
  if (!pair.has_idler()) throw DomainError("local_ensemble: pair has no idler");
  const gauss::GeneralDyne meas(t);
  LocalEnsemble out;
  out.t = t;
  const std::vector<int> keep_idler{1};
  const std::vector<int> keep_detector{0};
  const auto idler = gauss::moments_from_fock(fock::partial_trace(pair.rho0, keep_idler));
  const Eigen::Matrix2d cov = idler.cov + meas.sigma();
  if (std::abs(cov(0, 1)) > 1e-9 * cov.norm()) throw DomainError("local_ensemble: idler is not phase covariant");
  const double sx = std::sqrt(cov(0, 0));
  const double sp = std::sqrt(cov(1, 1));
  const auto mixture = fock::mix(pair.rho0, pair.rho1, p0);
  out.entropy1 = fock::von_neumann_entropy(fock::partial_trace(pair.rho1, keep_detector).normalized());

  // Outcome beta = (sx u_x, sp u_p) / 2 with u standard normal; |u| <= R keeps
  // all but e^{-R^2/2} = 1e-8 of the outcome mass.
  const double rmax = std::sqrt(2.0 * std::log(1e8));
  const auto radial = quad::gauss_legendre(grid.radial, 0.0, rmax);
  const bool heterodyne = std::abs(t - 0.5) < 1e-15;
  std::vector<double> phases;
  double phase_weight = 2.0 * std::numbers::pi;
  if (!heterodyne) {
    const int m = std::max(grid.angular, 1);
    phase_weight = 4.0 * (0.5 * std::numbers::pi / m);
    for (int k = 0; k < m; ++k) phases.push_back((k + 0.5) * 0.5 * std::numbers::pi / m);
  } else {
    phases.push_back(0.0);
  }
  const int idler_dim = pair.rho0.dims().dims[1];
  const double r_m = meas.squeezing();
  const std::size_t total = radial.nodes.size() * phases.size();
  out.nodes = parallel_map<LocalNode>(total, [&](std::size_t i) {
    const std::size_t ir = i / phases.size();
    const double rho = radial.nodes[ir];
    const double phi = phases[i % phases.size()];
    const std::complex<double> beta{0.5 * sx * rho * std::cos(phi), 0.5 * sp * rho * std::sin(phi)};
    // The pair has no idler support beyond its cutoff, so truncating the
    // projector there is exact.
    const fock::Vec ket = fock::squeezed_coherent_amplitudes(r_m, beta, idler_dim);
    const auto c0 = fock::project_pure(pair.rho0, 1, ket);
    const auto cm = fock::project_pure(mixture, 1, ket);
    LocalNode node;
    node.weight = radial.weights[ir] * phase_weight * rho * 0.25 * sx * sp * cm.density;
    node.entropy0 = fock::von_neumann_entropy(c0.state.normalized());
    node.entropy_mix = fock::von_neumann_entropy(cm.state.normalized());
    return node;
  });
  for (const auto& n : out.nodes) out.total_weight += n.weight;
  return out;
}

double local_holevo(const LocalEnsemble& e, double p0) {
  check_prior(p0);
  const double p1 = 1.0 - p0;
  double total = 0.0;
  for (const auto& n : e.nodes) total += n.weight * (n.entropy_mix - p0 * n.entropy0 - p1 * e.entropy1);
  return total;
}

}  // namespace qillum::info
