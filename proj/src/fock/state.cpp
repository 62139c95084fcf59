#include "qillum/fock.hpp"

#include "partition.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qillum::fock {

TruncationSpec::TruncationSpec(std::vector<int> d, double tol) : dims(std::move(d)), trace_tol(tol) {
  validate();
}

void TruncationSpec::validate() const {
  if (dims.empty()) throw DomainError("TruncationSpec: at least one mode required");
  for (int d : dims) {
    if (d < 2) throw DomainError("TruncationSpec: every mode needs dim >= 2");
  }
  if (!(trace_tol >= 0.0 && trace_tol < 1.0)) {
    throw DomainError("TruncationSpec: trace_tol must lie in [0, 1)");
  }
  Index total = 1;
  for (int d : dims) {
    total *= d;
    if (total > kMaxTotalDim) throw DomainError("TruncationSpec: total dimension overflow");
  }
}

Index TruncationSpec::total_dim() const noexcept {
  Index total = 1;
  for (int d : dims) total *= d;
  return total;
}

Index TruncationSpec::stride(int mode) const {
  Index s = 1;
  for (int k = num_modes() - 1; k > mode; --k) s *= dims[static_cast<std::size_t>(k)];
  return s;
}

Index TruncationSpec::flat(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != num_modes()) {
    throw DomainError("TruncationSpec::flat: occupation size mismatch");
  }
  Index i = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (occupation[k] < 0 || occupation[k] >= dims[k]) {
      throw DomainError("TruncationSpec::flat: occupation out of range");
    }
    i = i * dims[k] + occupation[k];
  }
  return i;
}

std::vector<int> TruncationSpec::unflat(Index i) const {
  std::vector<int> occ(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    occ[k] = static_cast<int>(i % dims[k]);
    i /= dims[k];
  }
  return occ;
}

// ---------------------------------------------------------------------------

FockState::FockState(TruncationSpec dims, std::vector<Block> blocks, double deficit,
                     bool pure_hint)
    : dims_(std::move(dims)), blocks_(std::move(blocks)), deficit_(deficit),
      pure_hint_(pure_hint) {
  dims_.validate();
  const Index n = dims_.total_dim();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& b : blocks_) {
    const auto sz = static_cast<Index>(b.basis.size());
    if (b.m.rows() != sz || b.m.cols() != sz) {
      throw DomainError("FockState: block matrix does not match its basis");
    }
    for (std::size_t k = 0; k < b.basis.size(); ++k) {
      const Index i = b.basis[k];
      if (i < 0 || i >= n) throw DomainError("FockState: basis index out of range");
      if (k > 0 && b.basis[k - 1] >= i) throw DomainError("FockState: block basis must be sorted");
      if (seen[static_cast<std::size_t>(i)]) throw DomainError("FockState: overlapping blocks");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const Block& a, const Block& b) { return a.basis.front() < b.basis.front(); });
}

FockState FockState::from_dense(TruncationSpec dims, const Mat& m, double deficit,
                                bool pure_hint) {
  dims.validate();
  const Index n = dims.total_dim();
  if (m.rows() != n || m.cols() != n) throw DomainError("from_dense: matrix size mismatch");
  detail::IndexPartition part(n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r <= c; ++r) {
      if (m(r, c) != cplx{} || m(c, r) != cplx{}) part.unite(r, c);
    }
  }
  std::vector<Block> blocks;
  for (auto& g : part.groups()) {
    Block b;
    const auto sz = static_cast<Index>(g.size());
    b.m.resize(sz, sz);
    for (Index r = 0; r < sz; ++r) {
      for (Index c = 0; c < sz; ++c) b.m(r, c) = m(g[r], g[c]);
    }
    b.basis = std::move(g);
    blocks.push_back(std::move(b));
  }
  return FockState(std::move(dims), std::move(blocks), deficit, pure_hint);
}

FockState FockState::from_pure(TruncationSpec dims, const Vec& psi, double deficit) {
  dims.validate();
  if (psi.size() != dims.total_dim()) throw DomainError("from_pure: vector size mismatch");
  SparseKet k;
  for (Index i = 0; i < psi.size(); ++i) {
    if (psi[i] != cplx{}) {
      k.index.push_back(i);
      k.amplitude.push_back(psi[i]);
    }
  }
  FockState s = from_ensemble(std::move(dims), std::span<const SparseKet>(&k, 1), deficit);
  s.pure_hint_ = true;
  return s;
}

FockState FockState::from_ensemble(TruncationSpec dims, std::span<const SparseKet> kets,
                                   double deficit) {
  dims.validate();
  const Index n = dims.total_dim();
  detail::IndexPartition part(n);
  for (const auto& k : kets) {
    if (k.index.size() != k.amplitude.size()) throw DomainError("from_ensemble: ragged ket");
    for (std::size_t q = 0; q < k.index.size(); ++q) {
      if (k.index[q] < 0 || k.index[q] >= n) throw DomainError("from_ensemble: index out of range");
      if (q == 0) part.touch(k.index[0]);
      else part.unite(k.index[0], k.index[q]);
    }
  }
  auto groups = part.groups();
  detail::Locator loc(n, groups);
  std::vector<Block> blocks(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto sz = static_cast<Index>(groups[g].size());
    blocks[g].m = Mat::Zero(sz, sz);
    blocks[g].basis = std::move(groups[g]);
  }
  std::vector<int> local;
  for (const auto& k : kets) {
    if (k.index.empty() || k.weight == 0.0) continue;
    auto& blk = blocks[static_cast<std::size_t>(loc.group[static_cast<std::size_t>(k.index[0])])];
    local.resize(k.index.size());
    for (std::size_t q = 0; q < k.index.size(); ++q) {
      local[q] = loc.local[static_cast<std::size_t>(k.index[q])];
    }
    for (std::size_t c = 0; c < k.index.size(); ++c) {
      const cplx ac = std::conj(k.amplitude[c]) * k.weight;
      for (std::size_t r = 0; r < k.index.size(); ++r) {
        blk.m(local[r], local[c]) += k.amplitude[r] * ac;
      }
    }
  }
  for (auto& b : blocks) b.m = (0.5 * (b.m + b.m.adjoint())).eval();
  return FockState(std::move(dims), std::move(blocks), deficit, kets.size() == 1);
}

double FockState::trace() const {
  double t = 0.0;
  for (const auto& b : blocks_) t += b.m.diagonal().real().sum();
  return t;
}

cplx FockState::element(Index row, Index col) const {
  for (const auto& b : blocks_) {
    auto r = std::lower_bound(b.basis.begin(), b.basis.end(), row);
    if (r == b.basis.end() || *r != row) continue;
    auto c = std::lower_bound(b.basis.begin(), b.basis.end(), col);
    if (c == b.basis.end() || *c != col) return {};
    return b.m(r - b.basis.begin(), c - b.basis.begin());
  }
  return {};
}

Mat FockState::to_dense() const {
  const Index n = dim();
  Mat m = Mat::Zero(n, n);
  for (const auto& b : blocks_) {
    for (std::size_t c = 0; c < b.basis.size(); ++c) {
      for (std::size_t r = 0; r < b.basis.size(); ++r) {
        m(b.basis[r], b.basis[c]) = b.m(static_cast<Index>(r), static_cast<Index>(c));
      }
    }
  }
  return m;
}

FockState FockState::scaled(double factor) const {
  FockState s = *this;
  for (auto& b : s.blocks_) b.m *= factor;
  return s;
}

FockState FockState::normalized() const {
  const double t = trace();
  if (!(t > 0.0)) throw DomainError("FockState::normalized: non-positive trace");
  return scaled(1.0 / t);
}

FockState FockState::with_trace_tol(double tol) const {
  FockState s = *this;
  s.dims_.trace_tol = tol;
  s.dims_.validate();
  return s;
}

void FockState::check_invariants() const {
  for (const auto& b : blocks_) {
    const double herm = (b.m - b.m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol) {
      std::ostringstream os;
      os << "FockState: not Hermitian (deviation " << herm << ")";
      throw DomainError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(b.m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdFloor) {
      std::ostringstream os;
      os << "FockState: negative eigenvalue " << es.eigenvalues().minCoeff();
      throw DomainError(os.str());
    }
  }
  const double dev = std::abs(trace() - 1.0);
  if (dev > dims_.trace_tol) {
    std::ostringstream os;
    os << "FockState: trace deviates from 1 by " << dev;
    throw TruncationError(os.str(), dev);
  }
}

double FockState::mean_photon(int mode) const {
  if (mode < 0 || mode >= num_modes()) throw DomainError("mean_photon: invalid mode");
  const Index stride = dims_.stride(mode);
  const Index d = dims_.dims[static_cast<std::size_t>(mode)];
  double n = 0.0;
  for (const auto& b : blocks_) {
    for (std::size_t k = 0; k < b.basis.size(); ++k) {
      const auto level = static_cast<double>((b.basis[k] / stride) % d);
      n += level * b.m(static_cast<Index>(k), static_cast<Index>(k)).real();
    }
  }
  return n;
}

double FockState::purity() const {
  double p = 0.0;
  for (const auto& b : blocks_) p += b.m.cwiseAbs2().sum();
  return p;
}

std::vector<SparseKet> FockState::to_ensemble() const {
  std::vector<SparseKet> out;
  for (const auto& b : blocks_) {
    Eigen::SelfAdjointEigenSolver<Mat> es(b.m);
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
      const double w = es.eigenvalues()[k];
      if (w <= kEntropyFloor) continue;
      SparseKet ket;
      ket.weight = w;
      for (std::size_t q = 0; q < b.basis.size(); ++q) {
        const cplx a = es.eigenvectors()(static_cast<Index>(q), k);
        if (a == cplx{}) continue;
        ket.index.push_back(b.basis[q]);
        ket.amplitude.push_back(a);
      }
      out.push_back(std::move(ket));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<JointBlock> joint_blocks(const FockState& a, const FockState& b) {
  if (!(a.dims().dims == b.dims().dims)) throw DomainError("joint_blocks: dimension mismatch");
  const Index n = a.dim();
  detail::IndexPartition part(n);
  for (const FockState* s : {&a, &b}) {
    for (const auto& blk : s->blocks()) {
      part.touch(blk.basis.front());
      for (std::size_t k = 1; k < blk.basis.size(); ++k) part.unite(blk.basis.front(), blk.basis[k]);
    }
  }
  auto groups = part.groups();
  detail::Locator loc(n, groups);
  std::vector<JointBlock> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto sz = static_cast<Index>(groups[g].size());
    out[g].a = Mat::Zero(sz, sz);
    out[g].b = Mat::Zero(sz, sz);
    out[g].basis = std::move(groups[g]);
  }
  auto scatter = [&](const FockState& s, Mat JointBlock::*which) {
    for (const auto& blk : s.blocks()) {
      auto& jb = out[static_cast<std::size_t>(loc.group[static_cast<std::size_t>(blk.basis.front())])];
      Mat& target = jb.*which;
      for (std::size_t c = 0; c < blk.basis.size(); ++c) {
        const int lc = loc.local[static_cast<std::size_t>(blk.basis[c])];
        for (std::size_t r = 0; r < blk.basis.size(); ++r) {
          const int lr = loc.local[static_cast<std::size_t>(blk.basis[r])];
          target(lr, lc) = blk.m(static_cast<Index>(r), static_cast<Index>(c));
        }
      }
    }
  };
  scatter(a, &JointBlock::a);
  scatter(b, &JointBlock::b);
  return out;
}

FockState mix(const FockState& a, const FockState& b, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("mix: weight outside [0, 1]");
  std::vector<FockState::Block> blocks;
  for (auto& jb : joint_blocks(a, b)) {
    FockState::Block blk;
    blk.basis = std::move(jb.basis);
    blk.m = p * jb.a + (1.0 - p) * jb.b;
    blocks.push_back(std::move(blk));
  }
  TruncationSpec spec = a.dims();
  spec.trace_tol = std::max(a.dims().trace_tol, b.dims().trace_tol);
  return FockState(std::move(spec), std::move(blocks),
                   p * a.truncation_deficit() + (1.0 - p) * b.truncation_deficit());
}

}  // namespace qillum::fock
