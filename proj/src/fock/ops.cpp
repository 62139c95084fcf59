#include "qillum/fock.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qillum::fock {

FockState tensor(const FockState& a, const FockState& b) {
  std::vector<int> dims = a.dims().dims;
  dims.insert(dims.end(), b.dims().dims.begin(), b.dims().dims.end());
  TruncationSpec spec(std::move(dims), std::max(a.dims().trace_tol, b.dims().trace_tol));
  const Index db = b.dim();
  std::vector<FockState::Block> blocks;
  blocks.reserve(a.blocks().size() * b.blocks().size());
  for (const auto& ba : a.blocks()) {
    for (const auto& bb : b.blocks()) {
      FockState::Block blk;
      blk.basis.reserve(ba.basis.size() * bb.basis.size());
      for (Index ia : ba.basis) {
        for (Index ib : bb.basis) blk.basis.push_back(ia * db + ib);
      }
      blk.m = Eigen::kroneckerProduct(ba.m, bb.m).eval();
      blocks.push_back(std::move(blk));
    }
  }
  const double deficit =
      1.0 - (1.0 - a.truncation_deficit()) * (1.0 - b.truncation_deficit());
  return FockState(std::move(spec), std::move(blocks), deficit,
                   a.is_pure_hint() && b.is_pure_hint());
}

FockState partial_trace(const FockState& rho, std::span<const int> keep) {
  const auto& spec = rho.dims();
  if (keep.empty()) throw DomainError("partial_trace: keep set must be nonempty");
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw DomainError("partial_trace: duplicate mode index");
  }
  for (int m : kept) {
    if (m < 0 || m >= spec.num_modes()) throw DomainError("partial_trace: invalid mode index");
  }
  std::vector<int> kept_dims;
  for (int m : kept) kept_dims.push_back(spec.dims[static_cast<std::size_t>(m)]);
  TruncationSpec out_spec(kept_dims, spec.trace_tol);
  const Index n_out = out_spec.total_dim();

  auto split = [&](Index k) {
    const auto occ = spec.unflat(k);
    Index kept_idx = 0;
    Index traced_idx = 0;
    std::size_t next = 0;
    for (int m = 0; m < spec.num_modes(); ++m) {
      const auto d = static_cast<Index>(spec.dims[static_cast<std::size_t>(m)]);
      if (next < kept.size() && kept[next] == m) {
        kept_idx = kept_idx * d + occ[static_cast<std::size_t>(m)];
        ++next;
      } else {
        traced_idx = traced_idx * d + occ[static_cast<std::size_t>(m)];
      }
    }
    return std::pair{kept_idx, traced_idx};
  };

  Mat out = Mat::Zero(n_out, n_out);
  for (const auto& b : rho.blocks()) {
    std::vector<std::pair<Index, Index>> parts;
    parts.reserve(b.basis.size());
    for (Index k : b.basis) parts.push_back(split(k));
    for (std::size_t c = 0; c < parts.size(); ++c) {
      for (std::size_t r = 0; r < parts.size(); ++r) {
        if (parts[r].second != parts[c].second) continue;
        out(parts[r].first, parts[c].first) += b.m(static_cast<Index>(r), static_cast<Index>(c));
      }
    }
  }
  return FockState::from_dense(std::move(out_spec), out, rho.truncation_deficit());
}

// ---------------------------------------------------------------------------

Eigen::VectorXd SpectralDecomposition::eigenvalues() const {
  Eigen::VectorXd all = Eigen::VectorXd::Zero(dim);
  Index k = 0;
  for (const auto& p : pieces) {
    all.segment(k, p.values.size()) = p.values;
    k += p.values.size();
  }
  std::sort(all.data(), all.data() + all.size(), std::greater<>());
  return all;
}

Mat SpectralDecomposition::eigenvectors() const {
  struct Column {
    double value;
    std::size_t piece;
    Index col;
  };
  std::vector<Column> order;
  std::vector<char> covered(static_cast<std::size_t>(dim), 0);
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    for (Index c = 0; c < pieces[p].values.size(); ++c) order.push_back({pieces[p].values[c], p, c});
    for (Index i : pieces[p].basis) covered[static_cast<std::size_t>(i)] = 1;
  }
  for (Index i = 0; i < dim; ++i) {
    if (!covered[static_cast<std::size_t>(i)]) order.push_back({0.0, pieces.size(), i});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Column& a, const Column& b) { return a.value > b.value; });
  Mat v = Mat::Zero(dim, dim);
  for (Index c = 0; c < dim; ++c) {
    const auto& col = order[static_cast<std::size_t>(c)];
    if (col.piece == pieces.size()) {
      v(col.col, c) = 1.0;
      continue;
    }
    const auto& p = pieces[col.piece];
    for (std::size_t r = 0; r < p.basis.size(); ++r) v(p.basis[r], c) = p.vectors(static_cast<Index>(r), col.col);
  }
  return v;
}

Mat SpectralDecomposition::reconstruct() const {
  Mat m = Mat::Zero(dim, dim);
  for (const auto& p : pieces) {
    const Mat local = p.vectors * p.values.asDiagonal() * p.vectors.adjoint();
    for (std::size_t c = 0; c < p.basis.size(); ++c) {
      for (std::size_t r = 0; r < p.basis.size(); ++r) {
        m(p.basis[r], p.basis[c]) = local(static_cast<Index>(r), static_cast<Index>(c));
      }
    }
  }
  return m;
}

SpectralDecomposition spectral(const FockState& rho) {
  SpectralDecomposition out;
  out.dim = rho.dim();
  for (const auto& b : rho.blocks()) {
    const double herm = (b.m - b.m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol) throw DomainError("spectral: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(b.m);
    SpectralDecomposition::Piece p;
    p.basis = b.basis;
    p.values = es.eigenvalues().reverse();
    p.vectors = es.eigenvectors().rowwise().reverse();
    out.pieces.push_back(std::move(p));
  }
  return out;
}

Eigen::VectorXd repaired_spectrum(const Eigen::VectorXd& eigenvalues) {
  Eigen::VectorXd out = eigenvalues;
  for (Index k = 0; k < out.size(); ++k) {
    if (out[k] < kPsdFloor) {
      std::ostringstream os;
      os << "negative eigenvalue " << out[k] << " below PSD floor";
      throw DomainError(os.str());
    }
    if (out[k] < 0.0) out[k] = 0.0;
  }
  return out;
}

double spectrum_entropy(const Eigen::VectorXd& eigenvalues) {
  const Eigen::VectorXd p = repaired_spectrum(eigenvalues);
  const double total = p.sum();
  if (!(total > 0.0)) throw DomainError("entropy of a state with zero trace");
  double s = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    const double x = p[k] / total;
    if (x > kEntropyFloor) s -= x * std::log2(x);
  }
  return s;
}

double von_neumann_entropy(const FockState& rho) {
  std::vector<double> all;
  for (const auto& b : rho.blocks()) {
    if (b.m.rows() == 1) {
      all.push_back(b.m(0, 0).real());
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(b.m, Eigen::EigenvaluesOnly);
    for (Index k = 0; k < es.eigenvalues().size(); ++k) all.push_back(es.eigenvalues()[k]);
  }
  if (all.empty()) throw DomainError("von_neumann_entropy: empty state");
  return spectrum_entropy(Eigen::Map<const Eigen::VectorXd>(all.data(), static_cast<Index>(all.size())));
}

// ---------------------------------------------------------------------------

Conditional project_pure(const FockState& rho, int mode, const Vec& ket) {
  const auto& spec = rho.dims();
  if (spec.num_modes() < 2) throw DomainError("project: needs at least two modes");
  if (mode < 0 || mode >= spec.num_modes()) throw DomainError("project: invalid mode");
  const int d = spec.dims[static_cast<std::size_t>(mode)];
  if (ket.size() != d) throw DomainError("project: ket dimension mismatch");
  std::vector<int> rest_dims;
  for (int m = 0; m < spec.num_modes(); ++m) {
    if (m != mode) rest_dims.push_back(spec.dims[static_cast<std::size_t>(m)]);
  }
  TruncationSpec out_spec(std::move(rest_dims), spec.trace_tol);
  const Index stride = spec.stride(mode);
  const Index n_out = out_spec.total_dim();
  Mat out = Mat::Zero(n_out, n_out);
  for (const auto& b : rho.blocks()) {
    const auto sz = b.basis.size();
    std::vector<Index> rest(sz);
    std::vector<cplx> amp(sz);
    for (std::size_t k = 0; k < sz; ++k) {
      const Index i = b.basis[k];
      const Index level = (i / stride) % d;
      rest[k] = (i / (stride * d)) * stride + i % stride;
      amp[k] = ket[level];
    }
    for (std::size_t c = 0; c < sz; ++c) {
      if (amp[c] == cplx{}) continue;
      for (std::size_t r = 0; r < sz; ++r) {
        out(rest[r], rest[c]) += std::conj(amp[r]) * b.m(static_cast<Index>(r), static_cast<Index>(c)) * amp[c];
      }
    }
  }
  out /= std::numbers::pi;
  out = (0.5 * (out + out.adjoint())).eval();
  Conditional result{FockState::from_dense(std::move(out_spec), out, rho.truncation_deficit()), 0.0};
  result.density = result.state.trace();
  return result;
}

Conditional project_coherent(const FockState& rho, int mode, cplx beta, std::optional<double> tol) {
  if (mode < 0 || mode >= rho.num_modes()) throw DomainError("project_coherent: invalid mode");
  const int d = rho.dims().dims[static_cast<std::size_t>(mode)];
  const Vec ket = coherent_amplitudes(beta, d);
  const double deficit = std::max(0.0, 1.0 - ket.squaredNorm());
  const double limit = tol.value_or(rho.dims().trace_tol);
  if (deficit > limit) {
    std::ostringstream os;
    os << "project_coherent: coherent ket deficit " << deficit << " exceeds " << limit;
    throw TruncationError(os.str(), deficit);
  }
  return project_pure(rho, mode, ket);
}

}  // namespace qillum::fock
