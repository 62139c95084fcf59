#include "qillum/fock.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qillum::fock {
namespace {

void check_deficit(const char* what, double deficit, double tol) {
  if (deficit > tol) {
    std::ostringstream os;
    os << what << ": truncation deficit " << deficit << " exceeds tolerance " << tol;
    throw TruncationError(os.str(), deficit);
  }
}

FockState finish_pure(const char* what, TruncationSpec spec, Vec psi, bool renormalize) {
  const double norm2 = psi.squaredNorm();
  const double deficit = std::max(0.0, 1.0 - norm2);
  check_deficit(what, deficit, spec.trace_tol);
  if (renormalize) psi /= std::sqrt(norm2);
  return FockState::from_pure(std::move(spec), psi, deficit);
}

}  // namespace

Vec coherent_amplitudes(cplx alpha, int d) {
  if (d < 2) throw DomainError("coherent_state: d must be >= 2");
  Vec c(d);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n + 1 < d; ++n) c[n + 1] = c[n] * alpha / std::sqrt(static_cast<double>(n + 1));
  return c;
}

Vec squeezed_coherent_amplitudes(double r, cplx alpha, int d) {
  if (d < 2) throw DomainError("squeezed_coherent_state: d must be >= 2");
  // (mu a + nu a^dag) |psi> = (mu alpha + nu alpha*) |psi>
  const double mu = std::cosh(r);
  const double nu = std::sinh(r);
  const cplx gamma = mu * alpha + nu * std::conj(alpha);
  Vec c(d);
  c[0] = std::exp(-0.5 * std::norm(alpha) - 0.5 * std::conj(alpha) * std::conj(alpha) * std::tanh(r)) /
         std::sqrt(mu);
  c[1] = gamma * c[0] / mu;
  for (int n = 1; n + 1 < d; ++n) {
    c[n + 1] = (gamma * c[n] - nu * std::sqrt(static_cast<double>(n)) * c[n - 1]) /
               (mu * std::sqrt(static_cast<double>(n + 1)));
  }
  return c;
}

FockState coherent_state(cplx alpha, int d, double trace_tol, bool renormalize) {
  return finish_pure("coherent_state", TruncationSpec({d}, trace_tol), coherent_amplitudes(alpha, d),
                     renormalize);
}

FockState squeezed_coherent_state(double r, cplx alpha, int d, double trace_tol, bool renormalize) {
  return finish_pure("squeezed_coherent_state", TruncationSpec({d}, trace_tol),
                     squeezed_coherent_amplitudes(r, alpha, d), renormalize);
}

FockState thermal_state(double nbar, int d, double trace_tol, bool renormalize) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw DomainError("thermal_state: nbar must be >= 0");
  TruncationSpec spec({d}, trace_tol);
  const double q = nbar / (nbar + 1.0);
  const double deficit = std::pow(q, d);
  check_deficit("thermal_state", deficit, trace_tol);
  std::vector<FockState::Block> blocks;
  double w = 1.0 / (nbar + 1.0);
  const double scale = renormalize ? 1.0 / (1.0 - deficit) : 1.0;
  for (Index n = 0; n < d; ++n, w *= q) {
    if (w == 0.0) break;
    FockState::Block b;
    b.basis = {n};
    b.m = Mat::Constant(1, 1, cplx{w * scale, 0.0});
    blocks.push_back(std::move(b));
  }
  return FockState(std::move(spec), std::move(blocks), deficit, nbar == 0.0);
}

FockState epr_state(double nbar, int d, double trace_tol, bool renormalize) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw DomainError("epr_state: nbar must be >= 0");
  TruncationSpec spec({d, d}, trace_tol);
  const double lambda = std::sqrt(nbar / (nbar + 1.0));
  Vec psi = Vec::Zero(static_cast<Index>(d) * d);
  double c = std::sqrt(1.0 - lambda * lambda);
  for (Index n = 0; n < d; ++n, c *= -lambda) psi[n * d + n] = c;
  return finish_pure("epr_state", std::move(spec), std::move(psi), renormalize);
}

}  // namespace qillum::fock
