#include "qillum/fock.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

namespace qillum::fock {
namespace {

struct SectorBasis {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

// The tridiagonal generator of a sector does not depend on the angle, so its
// eigenbasis is computed once per (N, lo, hi) and reused for every angle.
const SectorBasis& sector_basis(int total, int lo, int hi) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<SectorBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{total, lo, hi}];
  if (!slot) {
    const int m = hi - lo + 1;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int k = 0; k + 1 < m; ++k) {
      const double n = lo + k;
      sub[k] = std::sqrt((n + 1.0) * (total - n));
    }
    auto b = std::make_unique<SectorBasis>();
    if (m == 1) {
      b->vectors = Eigen::MatrixXd::Identity(1, 1);
      b->values = Eigen::VectorXd::Zero(1);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      b->vectors = es.eigenvectors();
      b->values = es.eigenvalues();
    }
    slot = std::move(b);
  }
  return *slot;
}

using SectorTable = std::vector<Eigen::MatrixXd>;

std::shared_ptr<const SectorTable> full_sectors(double reflectivity, double sign, int max_total) {
  static std::mutex mu;
  struct Entry {
    double eps;
    double sign;
    std::shared_ptr<const SectorTable> table;
  };
  static std::vector<Entry> lru;
  {
    std::lock_guard lock(mu);
    for (std::size_t k = 0; k < lru.size(); ++k) {
      if (lru[k].eps == reflectivity && lru[k].sign == sign &&
          static_cast<int>(lru[k].table->size()) > max_total) {
        auto hit = lru[k];
        lru.erase(lru.begin() + static_cast<std::ptrdiff_t>(k));
        lru.push_back(hit);
        return hit.table;
      }
    }
  }
  auto table = std::make_shared<SectorTable>();
  table->reserve(static_cast<std::size_t>(max_total) + 1);
  for (int n = 0; n <= max_total; ++n) {
    table->push_back(beamsplitter_sector(n, 0, n, reflectivity, sign));
  }
  std::lock_guard lock(mu);
  lru.push_back({reflectivity, sign, table});
  if (lru.size() > 6) lru.erase(lru.begin());
  return table;
}

void check_reflectivity(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("beam splitter reflectivity must lie in [0, 1]");
}

}  // namespace

Eigen::MatrixXd beamsplitter_sector(int total, int lo, int hi, double reflectivity,
                                    double phase_sign) {
  check_reflectivity(reflectivity);
  if (lo < 0 || hi < lo || hi > total) throw DomainError("beamsplitter_sector: bad photon range");
  const SectorBasis& basis = sector_basis(total, lo, hi);
  const double theta = phase_sign * std::asin(std::sqrt(reflectivity));
  // exp(theta G) with G = -i D T D^dag, D = diag(i^n), T = W tau W^T real tridiagonal:
  // U_jk = sum_l W_jl W_kl cos((j - k) pi/2 - theta tau_l)
  const auto& w = basis.vectors;
  const Eigen::ArrayXd phase = theta * basis.values.array();
  const Eigen::MatrixXd even = w * phase.cos().matrix().asDiagonal() * w.transpose();
  const Eigen::MatrixXd odd = w * phase.sin().matrix().asDiagonal() * w.transpose();
  const int m = hi - lo + 1;
  Eigen::MatrixXd u(m, m);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      const int q = ((j - k) % 4 + 4) % 4;
      switch (q) {
        case 0: u(j, k) = even(j, k); break;
        case 1: u(j, k) = odd(j, k); break;
        case 2: u(j, k) = -even(j, k); break;
        default: u(j, k) = -odd(j, k); break;
      }
    }
  }
  return u;
}

FockState apply_beamsplitter(const FockState& rho, int mode_i, int mode_j, double reflectivity,
                             double phase_sign) {
  check_reflectivity(reflectivity);
  const auto& spec = rho.dims();
  if (mode_i < 0 || mode_j < 0 || mode_i >= spec.num_modes() || mode_j >= spec.num_modes() ||
      mode_i == mode_j) {
    throw DomainError("apply_beamsplitter: invalid mode pair");
  }
  const int d = spec.dims[static_cast<std::size_t>(mode_i)];
  if (spec.dims[static_cast<std::size_t>(mode_j)] != d) {
    throw DomainError("apply_beamsplitter: modes must share the same dimension");
  }
  const Index n = spec.total_dim();
  const Index si = spec.stride(mode_i);
  const Index sj = spec.stride(mode_j);

  // Group basis states by (spectator occupation, n_i + n_j).
  struct Group {
    std::vector<Index> index;  // ordered by n_i ascending
    int lo = 0;
    int hi = 0;
    int total = 0;
  };
  std::map<std::pair<Index, int>, Group> groups;
  for (Index k = 0; k < n; ++k) {
    const int ni = static_cast<int>((k / si) % d);
    const int nj = static_cast<int>((k / sj) % d);
    const Index rest = k - ni * si - nj * sj;
    groups[{rest, ni + nj}].index.push_back(k);
  }
  Mat dense = rho.to_dense();
  Mat tmp = Mat::Zero(n, n);
  std::vector<std::pair<std::vector<Index>, Eigen::MatrixXd>> ops;
  ops.reserve(groups.size());
  for (auto& [key, g] : groups) {
    const int total = key.second;
    g.lo = std::max(0, total - (d - 1));
    g.hi = std::min(total, d - 1);
    std::sort(g.index.begin(), g.index.end(), [&](Index a, Index b) {
      return (a / si) % d < (b / si) % d;
    });
    ops.emplace_back(std::move(g.index), beamsplitter_sector(total, g.lo, g.hi, reflectivity, phase_sign));
  }
  // rows: U rho
  for (const auto& [idx, u] : ops) {
    const auto m = static_cast<Index>(idx.size());
    Mat rows(m, n);
    for (Index r = 0; r < m; ++r) rows.row(r) = dense.row(idx[static_cast<std::size_t>(r)]);
    const Mat out = u.cast<cplx>() * rows;
    for (Index r = 0; r < m; ++r) tmp.row(idx[static_cast<std::size_t>(r)]) = out.row(r);
  }
  // columns: (U rho) U^dag
  Mat result = Mat::Zero(n, n);
  for (const auto& [idx, u] : ops) {
    const auto m = static_cast<Index>(idx.size());
    Mat cols(n, m);
    for (Index c = 0; c < m; ++c) cols.col(c) = tmp.col(idx[static_cast<std::size_t>(c)]);
    const Mat out = cols * u.transpose().cast<cplx>();
    for (Index c = 0; c < m; ++c) result.col(idx[static_cast<std::size_t>(c)]) = out.col(c);
  }
  result = (0.5 * (result + result.adjoint())).eval();
  return FockState::from_dense(spec, result, rho.truncation_deficit());
}

FockState mix_with_thermal(const FockState& probe, int probe_mode, double reflectivity,
                           double nbar_env, const ThermalMixDims& dims, double phase_sign) {
  check_reflectivity(reflectivity);
  if (!(nbar_env >= 0.0) || !std::isfinite(nbar_env)) {
    throw DomainError("mix_with_thermal: environment photon number must be >= 0");
  }
  const auto& in = probe.dims();
  if (probe_mode < 0 || probe_mode >= in.num_modes()) throw DomainError("mix_with_thermal: invalid mode");
  if (dims.env_dim < 2 || dims.out_dim < 2) throw DomainError("mix_with_thermal: dims must be >= 2");

  TruncationSpec out_spec = in;
  out_spec.dims[static_cast<std::size_t>(probe_mode)] = dims.out_dim;
  out_spec.trace_tol = dims.trace_tol;
  out_spec.validate();

  const int d_probe = in.dims[static_cast<std::size_t>(probe_mode)];
  const Index in_stride = in.stride(probe_mode);
  const Index out_stride = out_spec.stride(probe_mode);

  // Environment weights m < env_dim; the traced output port carries e = N - a photons.
  const double q = nbar_env / (nbar_env + 1.0);
  std::vector<double> env_w;
  {
    double w = 1.0 / (nbar_env + 1.0);
    for (int m = 0; m < dims.env_dim; ++m, w *= q) {
      if (w == 0.0) break;
      env_w.push_back(w);
    }
  }
  const double env_tail = std::pow(q, dims.env_dim);
  const int env_levels = static_cast<int>(env_w.size());
  const int max_total = d_probe - 1 + env_levels - 1;
  const auto table = full_sectors(reflectivity, phase_sign, max_total);

  const auto ensemble = probe.to_ensemble();
  std::vector<SparseKet> kets;
  double kept = 0.0;
  for (const auto& comp : ensemble) {
    // Split every amplitude into (spectator index in the output space, probe level).
    std::vector<std::pair<Index, int>> split(comp.index.size());
    for (std::size_t q2 = 0; q2 < comp.index.size(); ++q2) {
      const Index k = comp.index[q2];
      const int level = static_cast<int>((k / in_stride) % d_probe);
      const Index hi_part = k / (in_stride * d_probe);
      const Index lo_part = k % in_stride;
      split[q2] = {hi_part * out_stride * dims.out_dim + lo_part, level};
    }
    for (int m = 0; m < env_levels; ++m) {
      const double w = comp.weight * env_w[static_cast<std::size_t>(m)];
      const int e_max = d_probe - 1 + m;
      std::vector<SparseKet> by_e(static_cast<std::size_t>(e_max) + 1);
      for (std::size_t q2 = 0; q2 < split.size(); ++q2) {
        const auto [rest, n] = split[q2];
        const int total = n + m;
        const Eigen::MatrixXd& u = (*table)[static_cast<std::size_t>(total)];
        const cplx amp = comp.amplitude[q2];
        const int a_max = std::min(total, dims.out_dim - 1);
        for (int a = 0; a <= a_max; ++a) {
          const double coeff = u(a, m);
          if (coeff == 0.0) continue;
          auto& ket = by_e[static_cast<std::size_t>(total - a)];
          ket.index.push_back(rest + a * out_stride);
          ket.amplitude.push_back(coeff * amp);
        }
      }
      for (auto& ket : by_e) {
        if (ket.index.empty()) continue;
        double nrm = 0.0;
        for (const auto& amp : ket.amplitude) nrm += std::norm(amp);
        kept += w * nrm;
        ket.weight = w;
        // Sorted indices keep block assembly deterministic.
        std::vector<std::size_t> order(ket.index.size());
        for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return ket.index[x] < ket.index[y]; });
        SparseKet sorted;
        sorted.weight = w;
        for (auto t : order) {
          sorted.index.push_back(ket.index[t]);
          sorted.amplitude.push_back(ket.amplitude[t]);
        }
        kets.push_back(std::move(sorted));
      }
    }
  }
  const double deficit = probe.truncation_deficit() + std::max(0.0, probe.trace() - kept);
  if (deficit > dims.trace_tol) {
    std::ostringstream os;
    os << "mix_with_thermal: truncation deficit " << deficit << " exceeds tolerance "
       << dims.trace_tol << " (env tail " << env_tail << ")";
    throw TruncationError(os.str(), deficit);
  }
  return FockState::from_ensemble(std::move(out_spec), kets, deficit);
}

namespace {

// <n - k| A_k |n> of the pure-loss channel with transmissivity eta.
double loss_kraus(int n, int k, double eta) {
  const double binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(0.5 * binom) * std::pow(eta, 0.5 * (n - k)) * std::pow(1.0 - eta, 0.5 * k);
}

// <n + k| B_k |n> of the quantum-limited amplifier with gain g.
double amp_kraus(int n, int k, double g) {
  const double binom = std::lgamma(n + k + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n + 1.0);
  return std::exp(0.5 * binom + 0.5 * k * std::log1p(-1.0 / g) - 0.5 * (n + 1) * std::log(g));
}

}  // namespace

FockState thermal_attenuator(const FockState& probe, int probe_mode, double reflectivity,
                             double nbar_env, int out_dim, double trace_tol, double phase_sign) {
  check_reflectivity(reflectivity);
  if (reflectivity == 1.0) throw DomainError("thermal_attenuator: reflectivity must be < 1");
  if (!(nbar_env >= 0.0) || !std::isfinite(nbar_env)) {
    throw DomainError("thermal_attenuator: environment photon number must be >= 0");
  }
  const auto& in = probe.dims();
  if (probe_mode < 0 || probe_mode >= in.num_modes()) throw DomainError("thermal_attenuator: invalid mode");
  if (out_dim < 2) throw DomainError("thermal_attenuator: out_dim must be >= 2");

  TruncationSpec out_spec = in;
  out_spec.dims[static_cast<std::size_t>(probe_mode)] = out_dim;
  out_spec.trace_tol = trace_tol;
  out_spec.validate();

  const int d_probe = in.dims[static_cast<std::size_t>(probe_mode)];
  const Index in_stride = in.stride(probe_mode);
  const Index out_stride = out_spec.stride(probe_mode);
  const double gain = 1.0 + (1.0 - reflectivity) * nbar_env;
  const double eta = reflectivity / gain;

  auto level_of = [&](Index k) { return static_cast<int>((k / in_stride) % d_probe); };

  // Pure loss stays on the input space. Its output is re-diagonalized before
  // amplification, which collapses the rank (a coherent probe stays pure).
  std::vector<SparseKet> lossy;
  for (const auto& comp : probe.to_ensemble()) {
    std::vector<cplx> amps(comp.amplitude.begin(), comp.amplitude.end());
    // The reflected sign -1 is the parity operator on the probe.
    if (phase_sign < 0.0) {
      for (std::size_t q = 0; q < amps.size(); ++q) {
        if (level_of(comp.index[q]) % 2 != 0) amps[q] = -amps[q];
      }
    }
    for (int lost = 0; lost < d_probe; ++lost) {
      SparseKet ket;
      ket.weight = comp.weight;
      for (std::size_t q = 0; q < amps.size(); ++q) {
        const int n = level_of(comp.index[q]);
        if (n < lost) continue;
        const double c = loss_kraus(n, lost, eta);
        if (c == 0.0) continue;
        ket.index.push_back(comp.index[q] - lost * in_stride);
        ket.amplitude.push_back(c * amps[q]);
      }
      if (!ket.index.empty()) lossy.push_back(std::move(ket));
    }
  }
  TruncationSpec loose = in;
  loose.trace_tol = 0.999;
  const auto attenuated = FockState::from_ensemble(loose, lossy).to_ensemble();

  std::vector<SparseKet> kets;
  double kept = 0.0;
  for (const auto& comp : attenuated) {
    std::vector<std::pair<Index, int>> split(comp.index.size());
    for (std::size_t q = 0; q < comp.index.size(); ++q) {
      const Index k = comp.index[q];
      split[q] = {(k / (in_stride * d_probe)) * out_stride * out_dim + k % in_stride, level_of(k)};
    }
    for (int gained = 0; gained < out_dim; ++gained) {
      SparseKet ket;
      ket.weight = comp.weight;
      for (std::size_t q = 0; q < split.size(); ++q) {
        const int level = split[q].second + gained;
        if (level >= out_dim) continue;
        const double c = amp_kraus(split[q].second, gained, gain);
        if (c == 0.0) continue;
        ket.index.push_back(split[q].first + level * out_stride);
        ket.amplitude.push_back(c * comp.amplitude[q]);
      }
      if (ket.index.empty()) continue;
      double nrm = 0.0;
      for (const auto& x : ket.amplitude) nrm += std::norm(x);
      kept += comp.weight * nrm;
      std::vector<std::size_t> order(ket.index.size());
      for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return ket.index[x] < ket.index[y]; });
      SparseKet sorted;
      sorted.weight = ket.weight;
      for (auto t : order) {
        sorted.index.push_back(ket.index[t]);
        sorted.amplitude.push_back(ket.amplitude[t]);
      }
      kets.push_back(std::move(sorted));
    }
  }
  const double deficit = probe.truncation_deficit() + std::max(0.0, probe.trace() - kept);
  if (deficit > trace_tol) {
    std::ostringstream os;
    os << "thermal_attenuator: truncation deficit " << deficit << " exceeds tolerance " << trace_tol;
    throw TruncationError(os.str(), deficit);
  }
  return FockState::from_ensemble(std::move(out_spec), kets, deficit);
}

}  // namespace qillum::fock
