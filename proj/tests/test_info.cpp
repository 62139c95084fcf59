#include "doctest.h"

#include "qillum/info.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

using namespace qillum;
using cplx = std::complex<double>;

namespace {

fock::FockState diag_state(const std::vector<double>& p) {
  const int d = static_cast<int>(p.size());
  fock::Mat m = fock::Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) m(k, k) = p[static_cast<std::size_t>(k)];
  return fock::FockState::from_dense(fock::TruncationSpec({d}), m);
}

fock::Mat random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  fock::Mat z(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) z(r, c) = cplx{g(rng), g(rng)};
  Eigen::HouseholderQR<fock::Mat> qr(z);
  return qr.householderQ() * fock::Mat::Identity(d, d);
}

fock::FockState random_state(int d, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  fock::Mat a(d, rank);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < rank; ++c) a(r, c) = cplx{g(rng), g(rng)};
  fock::Mat m = a * a.adjoint();
  m /= m.trace().real();
  return fock::FockState::from_dense(fock::TruncationSpec({d}), m);
}

fock::FockState rotated(const fock::FockState& rho, const fock::Mat& u) {
  return fock::FockState::from_dense(rho.dims(), u * rho.to_dense() * u.adjoint());
}

double h2(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

ScenarioParams desk_params(Probe probe = EprProbe{}) {
  ScenarioParams p;
  p.epsilon = 0.1;
  p.nbar_probe = 0.5;
  p.nbar_env = 4.0;
  p.probe = std::move(probe);
  return p;
}

}  // namespace

TEST_CASE("degenerate inputs give zero information") {
  std::mt19937_64 rng(7);
  const auto a = random_state(5, 3, rng);
  CHECK(std::abs(info::holevo(a, a, 0.3)) < 1e-12);
  CHECK(std::abs(info::fuchs_lower(a, a, 0.3).value) < 1e-12);
  CHECK(std::abs(info::fuchs_upper(a, a, 0.3).value) < 1e-12);
  const auto b = random_state(5, 5, rng);
  for (double p0 : {0.0, 1.0}) {
    CHECK(info::holevo(a, b, p0) == 0.0);
    CHECK(info::fuchs_lower(a, b, p0).value == 0.0);
    CHECK(info::fuchs_upper(a, b, p0).value == 0.0);
  }
  info::PovmDescription trivial{{fock::Mat::Identity(5, 5)}};
  CHECK(std::abs(info::mutual_information_povm(a, b, 0.4, trivial)) < 1e-14);
  CHECK_THROWS_AS(info::holevo(a, b, 1.2), DomainError);
  CHECK_THROWS_AS(info::holevo(a, random_state(4, 4, rng), 0.5), DomainError);
  CHECK_THROWS_AS(info::fuchs_upper(a, b, 0.5, 20), DomainError);
}

TEST_CASE("orthogonal pure states carry the prior entropy") {
  const auto a = diag_state({1.0, 0.0, 0.0});
  const auto b = diag_state({0.0, 1.0, 0.0});
  for (double p0 : {0.5, 0.2}) {
    CHECK(info::holevo(a, b, p0) == doctest::Approx(h2(p0)).epsilon(1e-12));
    CHECK(info::fuchs_lower(a, b, p0).value == doctest::Approx(h2(p0)).epsilon(1e-12));
    CHECK(info::fuchs_upper(a, b, p0).value == doctest::Approx(h2(p0)).epsilon(1e-5));
  }
}

TEST_CASE("commuting states: both bounds reach the Holevo information") {
  const auto a = diag_state({0.5, 0.3, 0.15, 0.05});
  const auto b = diag_state({0.1, 0.2, 0.3, 0.4});
  const double p0 = 0.35;
  const double chi = info::holevo(a, b, p0);
  // Shannon mutual information of the joint distribution.
  const std::vector<double> pa{0.5, 0.3, 0.15, 0.05};
  const std::vector<double> pb{0.1, 0.2, 0.3, 0.4};
  double mi = 0.0;
  info::PovmDescription number;
  for (int k = 0; k < 4; ++k) {
    const double q = p0 * pa[k] + (1 - p0) * pb[k];
    mi += p0 * pa[k] * std::log2(pa[k] / q) + (1 - p0) * pb[k] * std::log2(pb[k] / q);
    fock::Mat e = fock::Mat::Zero(4, 4);
    e(k, k) = 1.0;
    number.elements.push_back(e);
  }
  CHECK(chi == doctest::Approx(mi).epsilon(1e-12));
  CHECK(info::mutual_information_povm(a, b, p0, number) == doctest::Approx(mi).epsilon(1e-12));
  CHECK(info::fuchs_lower(a, b, p0).value == doctest::Approx(mi).epsilon(1e-10));
  CHECK(info::fuchs_upper(a, b, p0).value == doctest::Approx(mi).epsilon(1e-6));
}

TEST_CASE("random pairs: ordering, POVMs and unitary invariance") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 3 + trial % 3;
    const auto a = random_state(d, d, rng);
    const auto b = random_state(d, trial % 2 == 0 ? d : 2, rng);
    const double p0 = u(rng);
    const double chi = info::holevo(a, b, p0);
    const double lo = info::fuchs_lower(a, b, p0).value;
    const double up = info::fuchs_upper(a, b, p0).value;
    CHECK(lo >= -1e-12);
    CHECK(lo <= up + 1e-8);
    CHECK(up <= chi + 1e-8);

    // Projective measurement in a random basis never beats the upper bound.
    const fock::Mat w = random_unitary(d, rng);
    info::PovmDescription povm;
    for (int k = 0; k < d; ++k) povm.elements.push_back(w.col(k) * w.col(k).adjoint());
    CHECK(info::mutual_information_povm(a, b, p0, povm) <= up + 1e-8);

    const fock::Mat v = random_unitary(d, rng);
    const auto ra = rotated(a, v);
    const auto rb = rotated(b, v);
    CHECK(info::holevo(ra, rb, p0) == doctest::Approx(chi).epsilon(1e-9));
    CHECK(info::fuchs_lower(ra, rb, p0).value == doctest::Approx(lo).epsilon(1e-8));
    CHECK(info::fuchs_upper(ra, rb, p0).value == doctest::Approx(up).epsilon(1e-6));
  }
}

TEST_CASE("invalid POVMs are rejected") {
  const auto a = diag_state({0.5, 0.5});
  info::PovmDescription half{{0.5 * fock::Mat::Identity(2, 2)}};
  CHECK_THROWS_AS(info::mutual_information_povm(a, a, 0.5, half), DomainError);
  fock::Mat neg = fock::Mat::Identity(2, 2);
  neg(1, 1) = -1.0;
  fock::Mat rest = fock::Mat::Zero(2, 2);
  rest(1, 1) = 2.0;
  info::PovmDescription bad{{neg, rest}};
  CHECK_THROWS_AS(info::mutual_information_povm(a, a, 0.5, bad), DomainError);
}

TEST_CASE("curvature is the second derivative of the upper bound integrand") {
  // For commuting states F equals the second derivative of the mixture entropy.
  const auto a = diag_state({0.6, 0.3, 0.1});
  const auto b = diag_state({0.2, 0.2, 0.6});
  auto s = [&](double p) { return fock::von_neumann_entropy(fock::mix(a, b, 1.0 - p)); };
  for (double p : {0.2, 0.5, 0.8}) {
    const double h = 1e-4;
    const double fd = (s(p + h) - 2 * s(p) + s(p - h)) / (h * h);
    CHECK(info::fuchs_curvature(a, b, p) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("upper bound quadrature converges on the illumination pair") {
  const auto p = desk_params(CoherentProbe{});
  const auto pair = scen::build_pair(p);
  const auto u21 = info::fuchs_upper(pair.rho0, pair.rho1, 0.5, 21);
  const auto u81 = info::fuchs_upper(pair.rho0, pair.rho1, 0.5, 81);
  CHECK(u21.rel_change < info::kUpperRelTol);
  CHECK(std::abs(u21.value - u81.value) / u81.value < 1e-5);
  const auto r = info::info_report(pair, 0.5);
  CHECK(r.fuchs_lower <= r.fuchs_upper + 1e-8);
  CHECK(r.fuchs_upper <= r.holevo + 1e-8);
}

TEST_CASE("refined report and monotonicity in the reflectivity") {
  double prev = 0.0;
  for (double eps : {0.02, 0.1, 0.3}) {
    ScenarioParams p = desk_params(CoherentProbe{});
    p.epsilon = eps;
    const auto r = info::info_report_refined(p);
    CHECK(r.converged);
    CHECK(r.truncation_change < 1e-7);
    CHECK(r.holevo > prev);
    prev = r.holevo;
  }
}

TEST_CASE("Gaussian fast path agrees with the Fock entropies") {
  const auto p = desk_params();
  const auto pair = scen::build_pair(p, scen::initial_dims(p).doubled());
  const double fock_chi = info::holevo(pair, 0.5);
  const double fast = info::holevo(pair, 0.5, {true});
  CHECK(std::abs(fock_chi - fast) < 1e-6);
}

TEST_CASE("heterodyne collapse: Laguerre integration matches the local ensemble") {
  const auto p = desk_params();
  const auto lag = info::integrated_local_info(p, false, true);
  CHECK(lag.converged);
  CHECK(lag.rel_change < 1e-6);
  const auto pair = scen::build_pair(p, scen::initial_dims(p).doubled());
  const auto ens = info::local_ensemble(pair, p.p0, 0.5);
  CHECK(ens.total_weight == doctest::Approx(1.0).epsilon(1e-6));
  const double chi_c = info::local_holevo(ens, p.p0);
  CHECK(std::abs(chi_c - lag.holevo) / lag.holevo < 1e-5);
  // Local measurements cannot beat the global Holevo information.
  CHECK(chi_c < info::holevo(pair, p.p0));
}

TEST_CASE("general-dyne local information is symmetric under t -> 1 - t") {
  const auto p = desk_params();
  const auto pair = scen::build_pair(p);
  for (double t : {0.2, 0.35}) {
    const auto a = info::local_ensemble(pair, p.p0, t);
    const auto b = info::local_ensemble(pair, p.p0, 1.0 - t);
    CHECK(a.total_weight == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(info::local_holevo(a, p.p0) - info::local_holevo(b, p.p0)) < 1e-10);
  }
  CHECK_THROWS_AS(info::local_ensemble(scen::build_pair(desk_params(CoherentProbe{})), 0.5, 0.5), DomainError);
}
