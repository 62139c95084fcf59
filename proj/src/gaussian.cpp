#include "qillum/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qillum::gauss {
namespace {

using cplx = std::complex<double>;

MatrixXd symplectic_form(int modes) {
  MatrixXd w = MatrixXd::Zero(2 * modes, 2 * modes);
  for (int k = 0; k < modes; ++k) {
    w(2 * k, 2 * k + 1) = 1.0;
    w(2 * k + 1, 2 * k) = -1.0;
  }
  return w;
}

void check_nbar(double nbar) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw DomainError("mean photon number must be >= 0");
}

}  // namespace

double uncertainty_margin(const MatrixXd& cov) {
  const int modes = static_cast<int>(cov.rows() / 2);
  const Eigen::MatrixXcd h = cov.cast<cplx>() + cplx{0.0, 1.0} * symplectic_form(modes).cast<cplx>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

GaussianState::GaussianState(VectorXd m, MatrixXd c) : mean(std::move(m)), cov(std::move(c)) {
  if (mean.size() == 0 || mean.size() % 2 != 0 || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DomainError("GaussianState: inconsistent mean/covariance sizes");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw DomainError("GaussianState: covariance is not symmetric");
  }
  const double margin = uncertainty_margin(cov);
  if (margin < -kUncertaintyTol) {
    std::ostringstream os;
    os << "GaussianState: uncertainty relation violated (min eigenvalue " << margin << ")";
    throw DomainError(os.str());
  }
}

GaussianState GaussianState::reduced(int mode) const {
  if (mode < 0 || mode >= modes()) throw DomainError("reduced: invalid mode");
  return GaussianState(mean.segment<2>(2 * mode), block(mode, mode));
}

GaussianState vacuum_cm(int modes) {
  if (modes < 1) throw DomainError("vacuum_cm: modes must be positive");
  return GaussianState(VectorXd::Zero(2 * modes), MatrixXd::Identity(2 * modes, 2 * modes));
}

GaussianState thermal_cm(double nbar) {
  check_nbar(nbar);
  return GaussianState(VectorXd::Zero(2), (2.0 * nbar + 1.0) * MatrixXd::Identity(2, 2));
}

GaussianState coherent_cm(cplx alpha) {
  return squeezed_coherent_cm(0.0, alpha);
}

GaussianState squeezed_coherent_cm(double r, cplx alpha) {
  VectorXd mean(2);
  mean << 2.0 * alpha.real(), 2.0 * alpha.imag();
  MatrixXd cov = MatrixXd::Zero(2, 2);
  cov(0, 0) = std::exp(-2.0 * r);
  cov(1, 1) = std::exp(2.0 * r);
  return GaussianState(mean, cov);
}

GaussianState epr_cm(double nbar, double cross_sign) {
  check_nbar(nbar);
  const double a = 2.0 * nbar + 1.0;
  const double c = cross_sign * 2.0 * std::sqrt(nbar * (nbar + 1.0));
  MatrixXd cov = a * MatrixXd::Identity(4, 4);
  cov(0, 2) = cov(2, 0) = c;
  cov(1, 3) = cov(3, 1) = -c;
  return GaussianState(VectorXd::Zero(4), cov);
}

GaussianState rotate_mode(const GaussianState& g, int mode, double phi) {
  if (mode < 0 || mode >= g.modes()) throw DomainError("rotate_mode: invalid mode");
  // a -> e^{-i phi} a  rotates (x, p) by -phi.
  MatrixXd s = MatrixXd::Identity(g.cov.rows(), g.cov.cols());
  const double c = std::cos(phi);
  const double sn = std::sin(phi);
  s(2 * mode, 2 * mode) = c;
  s(2 * mode, 2 * mode + 1) = sn;
  s(2 * mode + 1, 2 * mode) = -sn;
  s(2 * mode + 1, 2 * mode + 1) = c;
  MatrixXd cov = s * g.cov * s.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return GaussianState(s * g.mean, cov);
}

std::vector<double> symplectic_eigenvalues(const GaussianState& g) {
  if (g.modes() == 1) return {std::sqrt(std::max(0.0, g.cov.determinant()))};
  if (g.modes() != 2) throw DomainError("symplectic_eigenvalues: one or two modes only");
  const double delta = g.block(0, 0).determinant() + g.block(1, 1).determinant() +
                       2.0 * g.block(0, 1).determinant();
  const double det = g.cov.determinant();
  // A discriminant at rounding level is a double root (e.g. pure states);
  // its square root would otherwise split the pair by ~1e-8.
  const double raw = delta * delta - 4.0 * det;
  const double disc = raw <= 64.0 * std::numeric_limits<double>::epsilon() * delta * delta ? 0.0 : std::sqrt(raw);
  return {std::sqrt(std::max(0.0, 0.5 * (delta - disc))), std::sqrt(std::max(0.0, 0.5 * (delta + disc)))};
}

double f_entropy(double x) {
  if (x < 1.0 - kUncertaintyTol) throw DomainError("f_entropy: symplectic eigenvalue below 1");
  if (x <= 1.0 + 1e-14) return 0.0;
  const double up = 0.5 * (x + 1.0);
  const double dn = 0.5 * (x - 1.0);
  return up * std::log2(up) - dn * std::log2(dn);
}

double g_entropy(double nbar) {
  check_nbar(nbar);
  return f_entropy(2.0 * nbar + 1.0);
}

double gaussian_entropy(const GaussianState& g) {
  double s = 0.0;
  for (double nu : symplectic_eigenvalues(g)) s += f_entropy(nu);
  return s;
}

double mutual_information(const GaussianState& g) {
  if (g.modes() != 2) throw DomainError("mutual_information: two-mode state required");
  return gaussian_entropy(g.reduced(0)) + gaussian_entropy(g.reduced(1)) - gaussian_entropy(g);
}

GaussianState moments_from_fock(const fock::FockState& rho) {
  const auto& spec = rho.dims();
  const int modes = spec.num_modes();
  std::vector<cplx> a(static_cast<std::size_t>(modes));
  // N_ij = <a_i^dag a_j>, M_ij = <a_i a_j>
  Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(modes, modes);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(modes, modes);
  const double tr = rho.trace();
  for (const auto& b : rho.blocks()) {
    std::vector<std::vector<int>> occ;
    occ.reserve(b.basis.size());
    for (auto k : b.basis) occ.push_back(spec.unflat(k));
    const auto sz = b.basis.size();
    // Tr(rho O) = sum_{r,c} rho(r, c) <c|O|r>
    for (std::size_t c = 0; c < sz; ++c) {
      for (std::size_t r = 0; r < sz; ++r) {
        const cplx v = b.m(static_cast<fock::Index>(r), static_cast<fock::Index>(c));
        if (v == cplx{}) continue;
        const auto& orow = occ[r];
        const auto& ocol = occ[c];
        int diff_count = 0;
        int total_diff = 0;
        for (int k = 0; k < modes; ++k) {
          const int dk = orow[static_cast<std::size_t>(k)] - ocol[static_cast<std::size_t>(k)];
          if (dk != 0) {
            ++diff_count;
            total_diff += dk;
          }
        }
        if (diff_count > 2) continue;
        for (int i = 0; i < modes; ++i) {
          const int ni = orow[static_cast<std::size_t>(i)];
          const int ci = ocol[static_cast<std::size_t>(i)];
          // <c| a_i |r>: c = r - e_i
          if (diff_count == 1 && total_diff == 1 && ni - ci == 1) {
            a[static_cast<std::size_t>(i)] += v * std::sqrt(static_cast<double>(ni));
          }
          for (int j = i; j < modes; ++j) {
            const int nj = orow[static_cast<std::size_t>(j)];
            const int cj = ocol[static_cast<std::size_t>(j)];
            if (i == j) {
              if (diff_count == 0) n(i, i) += v * static_cast<double>(ni);
              if (diff_count == 1 && ni - ci == 2) m(i, i) += v * std::sqrt(static_cast<double>(ni) * (ni - 1));
              continue;
            }
            // <c| a_i^dag a_j |r>: c = r - e_j + e_i
            if (diff_count == 2 && ci - ni == 1 && nj - cj == 1) {
              n(i, j) += v * std::sqrt(static_cast<double>(ci) * nj);
            }
            // <c| a_i a_j |r>: c = r - e_i - e_j
            if (diff_count == 2 && ni - ci == 1 && nj - cj == 1) {
              m(i, j) += v * std::sqrt(static_cast<double>(ni) * nj);
            }
          }
        }
      }
    }
  }
  for (auto& x : a) x /= tr;
  n /= tr;
  m /= tr;
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < i; ++j) {
      n(i, j) = std::conj(n(j, i));
      m(i, j) = m(j, i);
    }
  }
  VectorXd mean(2 * modes);
  MatrixXd cov(2 * modes, 2 * modes);
  for (int i = 0; i < modes; ++i) {
    const cplx ai = a[static_cast<std::size_t>(i)];
    mean[2 * i] = 2.0 * ai.real();
    mean[2 * i + 1] = 2.0 * ai.imag();
  }
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      const cplx ai = a[static_cast<std::size_t>(i)];
      const cplx aj = a[static_cast<std::size_t>(j)];
      const cplx nn = n(i, j) - std::conj(ai) * aj;
      const cplx mm = m(i, j) - ai * aj;
      const double delta = i == j ? 1.0 : 0.0;
      cov(2 * i, 2 * j) = 2.0 * mm.real() + 2.0 * nn.real() + delta;
      cov(2 * i + 1, 2 * j + 1) = -2.0 * mm.real() + 2.0 * nn.real() + delta;
      cov(2 * i, 2 * j + 1) = 2.0 * nn.imag() + 2.0 * mm.imag();
      cov(2 * j + 1, 2 * i) = cov(2 * i, 2 * j + 1);
    }
  }
  cov = (0.5 * (cov + cov.transpose())).eval();
  return GaussianState(mean, cov);
}

// ---------------------------------------------------------------------------

GeneralDyne::GeneralDyne(double transmissivity) : t(transmissivity) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("general-dyne transmissivity must lie in (0, 1)");
}

Matrix2d GeneralDyne::sigma() const {
  Matrix2d s = Matrix2d::Zero();
  s(0, 0) = (1.0 - t) / t;
  s(1, 1) = t / (1.0 - t);
  return s;
}

double GeneralDyne::squeezing() const { return 0.5 * std::log(t / (1.0 - t)); }

double DyneConditional::density(cplx beta) const {
  const Vector2d d = Vector2d(2.0 * beta.real(), 2.0 * beta.imag()) - mean_b;
  const double q = d.dot(outcome_cov.ldlt().solve(d));
  return (2.0 / std::numbers::pi) / std::sqrt(outcome_cov.determinant()) * std::exp(-0.5 * q);
}

Vector2d DyneConditional::conditional_mean(cplx beta) const {
  const Vector2d d = Vector2d(2.0 * beta.real(), 2.0 * beta.imag()) - mean_b;
  return conditional.mean + gain * d;
}

DyneConditional conditional_after_generaldyne(const GaussianState& g, const GeneralDyne& meas) {
  if (g.modes() != 2) throw DomainError("conditional_after_generaldyne: two-mode state required");
  const Matrix2d a = g.block(0, 0);
  const Matrix2d b = g.block(1, 1);
  const Matrix2d c = g.block(0, 1);
  const Matrix2d bs = b + meas.sigma();
  if (std::abs(bs.determinant()) < 1e-300) throw DomainError("conditional_after_generaldyne: singular B + Sigma");
  const Matrix2d gain = c * bs.inverse();
  Matrix2d cond = a - gain * c.transpose();
  cond = (0.5 * (cond + cond.transpose())).eval();
  DyneConditional out{GaussianState(g.mean.segment<2>(0) - gain * g.mean.segment<2>(2), cond), gain, bs,
                      g.mean.segment<2>(2)};
  return out;
}

double gaussian_discord(const GaussianState& g, const GeneralDyne& m) {
  if (g.modes() != 2) throw DomainError("gaussian_discord: two-mode state required");
  const auto cond = conditional_after_generaldyne(g, m);
  return gaussian_entropy(g.reduced(1)) - gaussian_entropy(g) + gaussian_entropy(cond.conditional);
}

DiscordOptimum gaussian_discord_opt(const GaussianState& g) {
  constexpr int kGrid = 19;
  constexpr double lo = 0.05;
  constexpr double hi = 0.95;
  const double step = (hi - lo) / (kGrid - 1);
  int best = 0;
  double best_val = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double v = gaussian_discord(g, GeneralDyne(lo + step * k));
    if (k == 0 || v < best_val) {
      best = k;
      best_val = v;
    }
  }
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kGrid - 1);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = gaussian_discord(g, GeneralDyne(x1));
  double f2 = gaussian_discord(g, GeneralDyne(x2));
  while (b - a > 1e-7) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = gaussian_discord(g, GeneralDyne(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = gaussian_discord(g, GeneralDyne(x2));
    }
  }
  DiscordOptimum out{f1 < f2 ? f1 : f2, f1 < f2 ? x1 : x2};
  if (best_val < out.value) out = {best_val, lo + step * best};
  return out;
}

GaussianState illumination_cm(const ScenarioParams& params, int hypothesis) {
  params.validate();
  if (hypothesis != 0 && hypothesis != 1) throw DomainError("hypothesis must be 0 or 1");
  const double eps = params.epsilon;
  const double n = params.nbar_probe;
  const double env_var = 2.0 * params.nbar_env + 1.0;
  if (std::holds_alternative<EprProbe>(params.probe)) {
    MatrixXd cov = MatrixXd::Identity(4, 4);
    cov.block<2, 2>(2, 2) *= 2.0 * n + 1.0;
    if (hypothesis == 1) {
      cov.block<2, 2>(0, 0) *= env_var;
    } else {
      const GaussianState epr = epr_cm(n);
      cov.block<2, 2>(0, 0) *= 2.0 * eps * n + env_var;
      cov.block<2, 2>(0, 2) = std::sqrt(eps) * epr.block(0, 1);
      cov.block<2, 2>(2, 0) = cov.block<2, 2>(0, 2).transpose();
    }
    return GaussianState(VectorXd::Zero(4), cov);
  }
  if (hypothesis == 1) return thermal_cm(params.nbar_env);
  GaussianState probe;
  if (std::holds_alternative<CoherentProbe>(params.probe)) {
    probe = coherent_cm(std::sqrt(n));
  } else if (const auto* sq = std::get_if<SqueezedProbe>(&params.probe)) {
    const double s = std::sinh(sq->r);
    probe = squeezed_coherent_cm(sq->r, std::sqrt(n - s * s));
  } else {
    throw DomainError("illumination_cm: custom probes have no Gaussian form");
  }
  // Detector = sqrt(eps) probe + sqrt(1-eps) env, env photons n_env / (1 - eps).
  const MatrixXd env = (2.0 * params.rescaled_env() + 1.0) * MatrixXd::Identity(2, 2);
  return GaussianState(std::sqrt(eps) * probe.mean, eps * probe.cov + (1.0 - eps) * env);
}

}  // namespace qillum::gauss
