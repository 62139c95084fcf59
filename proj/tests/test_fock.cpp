#include "doctest.h"

#include "qillum/fock.hpp"
#include "qillum/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace qillum::fock;
using qillum::fock::Index;

namespace {

// Entropy in bits of a thermal state, closed form.
double g_bits(double n) {
  return n <= 0.0 ? 0.0 : (n + 1.0) * std::log2(n + 1.0) - n * std::log2(n);
}

// exp(generator) |0> on a padded space, generator anti-Hermitian; reference for
// the recurrence-based amplitude construction.
Vec apply_exp_antihermitian(const Mat& generator, const Vec& v) {
  Eigen::SelfAdjointEigenSolver<Mat> es(cplx{0.0, 1.0} * generator);
  const Eigen::VectorXd w = es.eigenvalues();
  Vec phases(w.size());
  for (Index k = 0; k < w.size(); ++k) phases[k] = std::exp(cplx{0.0, -w[k]});
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * v;
}

Mat lowering(int d) {
  Mat a = Mat::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Vec basis_ket(int d, int n) {
  Vec v = Vec::Zero(d);
  v[n] = 1.0;
  return v;
}

FockState random_two_mode(int d, std::mt19937_64& rng, int rank) {
  std::normal_distribution<double> g;
  Mat m = Mat::Zero(d * d, d * d);
  for (int k = 0; k < rank; ++k) {
    Vec v(d * d);
    for (Index i = 0; i < v.size(); ++i) v[i] = cplx{g(rng), g(rng)};
    m += v * v.adjoint();
  }
  m /= m.trace().real();
  return FockState::from_dense(TruncationSpec({d, d}), m);
}

}  // namespace

TEST_CASE("truncation spec validation") {
  CHECK_THROWS_AS(TruncationSpec({1}), DomainError);
  CHECK_THROWS_AS(TruncationSpec({4}, 1.0), DomainError);
  CHECK_THROWS_AS(TruncationSpec({4}, -0.1), DomainError);
  TruncationSpec s({3, 4, 5});
  CHECK(s.total_dim() == 60);
  const std::vector<int> occ{2, 1, 3};
  CHECK(s.flat(occ) == (2 * 4 + 1) * 5 + 3);
  CHECK(s.unflat(s.flat(occ)) == occ);
}

TEST_CASE("coherent state") {
  SUBCASE("vacuum") {
    const auto s = coherent_state(0.0, 8);
    CHECK(s.element(0, 0).real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.trace() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.truncation_deficit() == 0.0);
  }
  SUBCASE("mean photon of |alpha|^2 = 0.5") {
    const double x = 0.5;
    const auto s = coherent_state(std::sqrt(x), 30);
    // Poisson partial sum over n < 30
    double oracle = 0.0;
    for (int n = 0; n < 30; ++n) oracle += n * std::exp(-x + n * std::log(x) - std::lgamma(n + 1.0));
    CHECK(std::abs(s.mean_photon(0) - oracle) < 1e-12);
    CHECK(std::abs(s.mean_photon(0) - 0.5) < 1e-10);
  }
  SUBCASE("deficit reported at d = 2") {
    try {
      (void)coherent_state(1.0, 2);
      FAIL("expected truncation error");
    } catch (const TruncationError& e) {
      CHECK(e.deficit() == doctest::Approx(1.0 - std::exp(-1.0) * 2.0).epsilon(1e-12));
      CHECK(e.deficit() == doctest::Approx(0.2642).epsilon(1e-3));
    }
    const auto loose = coherent_state(1.0, 2, 0.5);
    CHECK(loose.truncation_deficit() == doctest::Approx(1.0 - 2.0 * std::exp(-1.0)));
    CHECK(coherent_state(1.0, 2, 0.5, true).trace() == doctest::Approx(1.0));
  }
}

TEST_CASE("thermal state") {
  SUBCASE("zero photons is the vacuum") {
    const auto s = thermal_state(0.0, 5);
    CHECK(s.element(0, 0).real() == 1.0);
    CHECK(s.trace() == 1.0);
  }
  SUBCASE("entropy of nbar = 4") {
    // Closed form (n+1) log2(n+1) - n log2 n
    const double exact = 5.0 * std::log2(5.0) - 4.0 * std::log2(4.0);
    CHECK(exact == doctest::Approx(3.60964).epsilon(1e-6));
    CHECK(std::abs(von_neumann_entropy(thermal_state(4.0, 100)) - exact) < 1e-6);
    // At d = 60 the geometric tail (0.8^60 ~ 1.5e-6) costs ~3e-5 bits; compare
    // against the renormalized finite sum instead.
    double z = 0.0;
    std::vector<double> p;
    for (int n = 0; n < 60; ++n) {
      p.push_back(std::pow(0.8, n) / 5.0);
      z += p.back();
    }
    double oracle = 0.0;
    for (double x : p) oracle -= (x / z) * std::log2(x / z);
    CHECK(std::abs(von_neumann_entropy(thermal_state(4.0, 60)) - oracle) < 1e-12);
  }
  SUBCASE("tail deficit beyond tolerance") {
    try {
      (void)thermal_state(4.0, 10, 1e-6);
      FAIL("expected truncation error");
    } catch (const TruncationError& e) {
      CHECK(e.deficit() == doctest::Approx(std::pow(0.8, 10)).epsilon(1e-12));
      CHECK(e.deficit() == doctest::Approx(0.1074).epsilon(1e-3));
    }
  }
  CHECK_THROWS_AS(thermal_state(-0.1, 10), DomainError);
}

TEST_CASE("squeezed coherent state") {
  SUBCASE("zero squeezing equals coherent") {
    const Vec a = squeezed_coherent_amplitudes(0.0, std::sqrt(0.5), 30);
    const Vec b = coherent_amplitudes(std::sqrt(0.5), 30);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("squeezed vacuum has even support") {
    const Vec a = squeezed_coherent_amplitudes(0.1, 0.0, 20);
    for (int n = 1; n < 20; n += 2) CHECK(a[n] == cplx{});
    CHECK(std::abs(a[2]) > 0.0);
  }
  SUBCASE("mean photon at the optimal squeezing") {
    const double r = 0.00279;
    const double alpha = std::sqrt(0.5 - std::sinh(r) * std::sinh(r));
    const auto s = squeezed_coherent_state(r, alpha, 40);
    CHECK(std::abs(s.mean_photon(0) - 0.5) < 1e-9);
  }
  SUBCASE("matches D(alpha) S(r)|0> from exponentiated generators") {
    const int pad = 90;
    const Mat a = lowering(pad);
    const Mat ad = a.adjoint();
    const double r = 0.4;
    const cplx alpha{0.8, -0.3};
    const Mat squeeze = 0.5 * r * (a * a - ad * ad);
    const Mat displace = alpha * ad - std::conj(alpha) * a;
    const Vec ref = apply_exp_antihermitian(displace, apply_exp_antihermitian(squeeze, basis_ket(pad, 0)));
    const Vec got = squeezed_coherent_amplitudes(r, alpha, 30);
    CHECK((ref.head(30) - got).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(got.squaredNorm() - 1.0) < 1e-9);
  }
}

TEST_CASE("EPR state") {
  SUBCASE("nbar = 0 is |0,0>") {
    const auto s = epr_state(0.0, 4);
    CHECK(s.element(0, 0).real() == doctest::Approx(1.0));
    CHECK(s.trace() == doctest::Approx(1.0));
  }
  SUBCASE("reduced state is thermal") {
    const auto s = epr_state(0.5, 30);
    const std::vector<int> keep_b{1};
    const auto reduced = partial_trace(s, keep_b);
    const auto thermal = thermal_state(0.5, 30);
    CHECK((reduced.to_dense() - thermal.to_dense()).cwiseAbs().maxCoeff() < 1e-10);
    const std::vector<int> keep_a{0};
    CHECK((partial_trace(s, keep_a).to_dense() - thermal.to_dense()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("entanglement entropy") {
    const auto s = epr_state(0.5, 60);
    const std::vector<int> keep{0};
    CHECK(std::abs(von_neumann_entropy(partial_trace(s, keep)) - g_bits(0.5)) < 1e-8);
    CHECK(g_bits(0.5) == doctest::Approx(1.37744).epsilon(1e-5));
  }
  SUBCASE("sign convention") {
    const auto s = epr_state(0.5, 6, 1e-2);
    CHECK(s.element(0, 7).real() < 0.0);  // <0,0|rho|1,1> ~ -lambda
  }
}

TEST_CASE("tensor and partial trace") {
  const auto vac = coherent_state(0.0, 3);
  const auto vv = tensor(vac, vac);
  CHECK(vv.dim() == 9);
  CHECK(vv.element(0, 0).real() == doctest::Approx(1.0));

  const auto th = thermal_state(4.0, 80);
  CHECK(tensor(th, vac).trace() == doctest::Approx(th.trace()).epsilon(1e-14));

  const auto a = thermal_state(0.3, 6, 1e-2);
  const auto b = coherent_state(cplx{0.4, 0.2}, 6, 1e-3, true);
  CHECK(tensor(a, b).purity() == doctest::Approx(a.purity() * b.purity()).epsilon(1e-12));

  const std::vector<int> keep0{0};
  const auto ra = partial_trace(tensor(a, b), keep0);
  CHECK((ra.to_dense() - a.to_dense() * b.trace()).cwiseAbs().maxCoeff() < 1e-14);
  const std::vector<int> keep1{1};
  const auto rb = partial_trace(tensor(a, b), keep1);
  CHECK((rb.to_dense() - b.to_dense() * a.trace()).cwiseAbs().maxCoeff() < 1e-14);

  const std::vector<int> bad{2};
  CHECK_THROWS_AS(partial_trace(vv, bad), DomainError);
  const std::vector<int> none;
  CHECK_THROWS_AS(partial_trace(vv, none), DomainError);
}

TEST_CASE("beam splitter sectors") {
  SUBCASE("unitarity on the reflectivity grid") {
    for (int k = 0; k <= 10; ++k) {
      const double eps = 0.1 * k;
      for (int total : {0, 1, 2, 7, 30}) {
        const Eigen::MatrixXd u = beamsplitter_sector(total, 0, total, eps);
        CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(total + 1, total + 1)).cwiseAbs().maxCoeff() < 1e-10);
        if (total > 4) {
          const Eigen::MatrixXd box = beamsplitter_sector(total, 2, total - 2, eps);
          CHECK((box.transpose() * box - Eigen::MatrixXd::Identity(total - 3, total - 3)).cwiseAbs().maxCoeff() < 1e-10);
        }
      }
    }
  }
  SUBCASE("two-photon closed form") {
    // U|2,0> = c^2|2,0> - sqrt2 cs|1,1> + s^2|0,2> in the |n_i> ordering, from
    // U a_i^dag U^dag = c a_i^dag - s a_j^dag.
    const double eps = 0.3;
    const double c = std::sqrt(1.0 - eps);
    const double s = std::sqrt(eps);
    const Eigen::MatrixXd u = beamsplitter_sector(2, 0, 2, eps);
    // columns indexed by input n_i; rows by output n_i.
    CHECK(u(2, 2) == doctest::Approx(c * c));
    CHECK(u(1, 2) == doctest::Approx(-std::sqrt(2.0) * c * s));
    CHECK(u(0, 2) == doctest::Approx(s * s));
    // U|1,1> = (c a_i^dag - s a_j^dag)(s a_i^dag + c a_j^dag)|0>
    CHECK(u(2, 1) == doctest::Approx(std::sqrt(2.0) * c * s));
    CHECK(u(1, 1) == doctest::Approx(c * c - s * s));
    CHECK(u(0, 1) == doctest::Approx(-std::sqrt(2.0) * s * c));
    // U|0,2>
    CHECK(u(2, 0) == doctest::Approx(s * s));
    CHECK(u(1, 0) == doctest::Approx(std::sqrt(2.0) * s * c));
    CHECK(u(0, 0) == doctest::Approx(c * c));
  }
}

TEST_CASE("beam splitter on states") {
  const auto one = FockState::from_pure(TruncationSpec({4}), basis_ket(4, 1));
  const auto vac = coherent_state(0.0, 4);
  const auto in = tensor(one, vac);

  SUBCASE("eps = 0 is the identity") {
    const auto out = apply_beamsplitter(in, 0, 1, 0.0);
    CHECK((out.to_dense() - in.to_dense()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("eps = 1 swap on low-photon states") {
    Vec psi = Vec::Zero(16);
    psi[0 * 4 + 1] = 0.6;  // |0,1>
    psi[1 * 4 + 0] = cplx{0.0, 0.8};  // |1,0>
    const auto s = FockState::from_pure(TruncationSpec({4, 4}), psi);
    const auto out = apply_beamsplitter(s, 0, 1, 1.0);
    const std::vector<int> k0{0};
    const std::vector<int> k1{1};
    CHECK((partial_trace(out, k0).to_dense() - partial_trace(s, k1).to_dense()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((partial_trace(out, k1).to_dense() - partial_trace(s, k0).to_dense()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("50:50 on |1,0> puts half a photon in each port") {
    const auto out = apply_beamsplitter(in, 0, 1, 0.5);
    CHECK(out.mean_photon(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.mean_photon(1) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("Heisenberg action on a coherent product") {
    // a_i -> sqrt(1-eps) a_i + sqrt(eps) a_j, so |a, b> -> |sqrt(1-eps) a + sqrt(eps) b, ...>
    const double eps = 0.2;
    const cplx al{0.3, 0.1};
    const cplx be{-0.2, 0.25};
    const auto s = tensor(coherent_state(al, 14, 1e-9, true), coherent_state(be, 14, 1e-9, true));
    const auto out = apply_beamsplitter(s, 0, 1, eps);
    const std::vector<int> k0{0};
    const auto r0 = partial_trace(out, k0);
    const cplx expect = std::sqrt(1 - eps) * al + std::sqrt(eps) * be;
    const auto ref = coherent_state(expect, 14, 1e-9, true);
    CHECK((r0.to_dense() - ref.to_dense()).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("photon number and entropy are conserved") {
    std::mt19937_64 rng(7);
    const auto rho = random_two_mode(5, rng, 3);
    const double before = rho.mean_photon(0) + rho.mean_photon(1);
    const double s_before = von_neumann_entropy(rho);
    for (double eps : {0.1, 0.37, 0.8}) {
      const auto out = apply_beamsplitter(rho, 0, 1, eps);
      CHECK(std::abs(out.mean_photon(0) + out.mean_photon(1) - before) < 1e-9);
      CHECK(std::abs(von_neumann_entropy(out) - s_before) < 1e-9);
      CHECK(out.trace() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    const auto odd = tensor(coherent_state(0.0, 3), coherent_state(0.0, 4));
    CHECK_THROWS_AS(apply_beamsplitter(odd, 0, 1, 0.5), DomainError);
    CHECK_THROWS_AS(apply_beamsplitter(in, 0, 0, 0.5), DomainError);
    CHECK_THROWS_AS(apply_beamsplitter(in, 0, 1, 1.5), DomainError);
  }
}

TEST_CASE("thermal mixing matches tensor + beam splitter + partial trace") {
  // Support kept below the box cutoff so the truncated generator is exact.
  const int d = 10;
  Vec probe = Vec::Zero(4);
  probe << 0.6, cplx{0.0, 0.5}, 0.4, cplx{0.3, -0.2};
  probe /= probe.norm();
  const auto probe_state = FockState::from_pure(TruncationSpec({4}), probe);
  const double eps = 0.27;
  const double n_env = 0.2;
  const int env_dim = 5;
  const auto mixed = mix_with_thermal(probe_state, 0, eps, n_env, ThermalMixDims{env_dim, d, 0.1});

  Vec probe_padded = Vec::Zero(d);
  probe_padded.head(4) = probe;
  Mat env = Mat::Zero(d, d);
  const double q = n_env / (n_env + 1.0);
  for (int m = 0; m < env_dim; ++m) env(m, m) = std::pow(q, m) / (n_env + 1.0);
  // Env in slot 0 and probe in slot 1: output slot 0 = sqrt(1-eps) env + sqrt(eps) probe.
  const auto joint = tensor(FockState::from_dense(TruncationSpec({d}, 0.1), env),
                            FockState::from_pure(TruncationSpec({d}, 0.1), probe_padded));
  const std::vector<int> keep{0};
  const auto ref = partial_trace(apply_beamsplitter(joint, 0, 1, eps), keep);
  CHECK((mixed.to_dense() - ref.to_dense()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(mixed.truncation_deficit() == doctest::Approx(std::pow(q, env_dim)).epsilon(1e-9));
}

TEST_CASE("Kraus thermal attenuator matches the explicit beam splitter") {
  std::mt19937_64 rng(11);
  const auto rho = random_two_mode(5, rng, 3);
  for (double sign : {+1.0, -1.0}) {
    for (double eps : {0.0, 0.27, 0.9}) {
      const double n_env = 0.3;
      const auto ref = mix_with_thermal(rho, 0, eps, n_env, ThermalMixDims{70, 9, 0.5}, sign);
      const auto fast = thermal_attenuator(rho, 0, eps, n_env, 9, 0.5, sign);
      CHECK((ref.to_dense() - fast.to_dense()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(fast.truncation_deficit() == doctest::Approx(ref.truncation_deficit()).epsilon(1e-6));
    }
  }
  // The idler slot (mode 1) may also be the attenuated one.
  const auto ref = mix_with_thermal(rho, 1, 0.4, 1.0, ThermalMixDims{90, 7, 0.5});
  CHECK((ref.to_dense() - thermal_attenuator(rho, 1, 0.4, 1.0, 7, 0.5).to_dense()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(thermal_attenuator(rho, 0, 1.0, 1.0, 7), DomainError);
  CHECK_THROWS_AS(thermal_attenuator(thermal_state(4.0, 10, 0.5), 0, 0.1, 4.0, 10), TruncationError);
}

TEST_CASE("thermal mixing of a coherent probe gives a displaced thermal state") {
  const double eps = 0.1;
  const double n_env = 0.5;
  const double alpha = 0.7;
  const auto probe = coherent_state(alpha, 25, 1e-12, true);
  const auto out = mix_with_thermal(probe, 0, eps, n_env / (1.0 - eps), ThermalMixDims{50, 40, 1e-9});
  CHECK(out.mean_photon(0) == doctest::Approx(eps * alpha * alpha + n_env).epsilon(1e-8));
  // Thermal part retains n_env photons: entropy equals that of thermal(n_env).
  const double g = (n_env + 1) * std::log2(n_env + 1) - n_env * std::log2(n_env);
  CHECK(std::abs(von_neumann_entropy(out.normalized()) - g) < 1e-8);
}

TEST_CASE("spectral decomposition") {
  SUBCASE("thermal eigenvalues are geometric") {
    const auto sd = spectral(thermal_state(4.0, 40, 1e-3));
    const auto ev = sd.eigenvalues();
    for (int n = 0; n < 40; ++n) CHECK(std::abs(ev[n] - std::pow(4.0, n) / std::pow(5.0, n + 1)) < 1e-14);
  }
  SUBCASE("pure state") {
    const auto sd = spectral(coherent_state(cplx{0.3, 0.4}, 20, 1e-9, true));
    const auto ev = sd.eigenvalues();
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev.tail(19).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("maximally mixed") {
    const auto s = FockState::from_dense(TruncationSpec({4}), Mat::Identity(4, 4) * 0.25);
    const auto ev = spectral(s).eigenvalues();
    for (int k = 0; k < 4; ++k) CHECK(ev[k] == doctest::Approx(0.25));
  }
  SUBCASE("reconstruction and orthonormality") {
    std::mt19937_64 rng(3);
    const auto rho = random_two_mode(4, rng, 5);
    const auto sd = spectral(rho);
    CHECK((sd.reconstruct() - rho.to_dense()).cwiseAbs().maxCoeff() < 1e-9);
    const Mat v = sd.eigenvectors();
    CHECK((v.adjoint() * v - Mat::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(sd.eigenvalues().sum() - rho.trace()) < 1e-10);
    const Eigen::VectorXd ev = sd.eigenvalues();
    for (Index k = 1; k < ev.size(); ++k) CHECK(ev[k - 1] >= ev[k]);
  }
  SUBCASE("non-Hermitian input is rejected") {
    Mat m = Mat::Identity(3, 3) / 3.0;
    m(0, 1) = 0.1;
    CHECK_THROWS_AS(spectral(FockState::from_dense(TruncationSpec({3}), m)), DomainError);
  }
}

TEST_CASE("von Neumann entropy") {
  CHECK(von_neumann_entropy(coherent_state(cplx{0.5, 0.1}, 20, 1e-9, true)) == doctest::Approx(0.0).epsilon(1e-9));
  Mat half = Mat::Zero(2, 2);
  half(0, 0) = half(1, 1) = 0.5;
  CHECK(von_neumann_entropy(FockState::from_dense(TruncationSpec({2}), half)) == doctest::Approx(1.0));
  Mat neg = Mat::Zero(2, 2);
  neg(0, 0) = 1.0 + 1e-3;
  neg(1, 1) = -1e-3;
  CHECK_THROWS_AS(von_neumann_entropy(FockState::from_dense(TruncationSpec({2}), neg)), DomainError);
  Mat tiny = Mat::Zero(2, 2);
  tiny(0, 0) = 1.0;
  tiny(1, 1) = -1e-12;
  CHECK(von_neumann_entropy(FockState::from_dense(TruncationSpec({2}), tiny)) == 0.0);
}

TEST_CASE("entropy invariance under beam splitter unitaries") {
  std::mt19937_64 rng(11);
  const auto rho = random_two_mode(4, rng, 2);
  const double s0 = von_neumann_entropy(rho);
  for (double eps : {0.05, 0.5, 0.95}) {
    CHECK(std::abs(von_neumann_entropy(apply_beamsplitter(rho, 1, 0, eps, -1.0)) - s0) < 1e-9);
  }
}

TEST_CASE("coherent projection") {
  SUBCASE("vacuum outcome on |0,0>") {
    const auto s = tensor(coherent_state(0.0, 4), coherent_state(0.0, 4));
    const auto c = project_coherent(s, 1, 0.0);
    CHECK(c.density == doctest::Approx(1.0 / std::numbers::pi));
    CHECK(c.state.element(0, 0).real() == doctest::Approx(1.0 / std::numbers::pi));
  }
  SUBCASE("EPR collapses to a coherent state -lambda beta*") {
    const double nbar = 0.5;
    const double lambda = std::sqrt(nbar / (nbar + 1.0));
    const auto s = epr_state(nbar, 40, 1e-12);
    const cplx beta{0.7, -0.4};
    const auto c = project_coherent(s, 1, beta);
    const auto cond = c.state.normalized();
    const auto ref = coherent_state(-lambda * std::conj(beta), 40, 1e-9, true);
    CHECK((cond.to_dense() - ref.to_dense()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("outcome density of a thermal mode is its Q function") {
    const double nbar = 0.8;
    const auto s = tensor(coherent_state(0.0, 3), thermal_state(nbar, 80, 1e-9));
    for (cplx beta : {cplx{0.0, 0.0}, cplx{0.5, 0.2}, cplx{-1.1, 0.9}}) {
      const double q = std::exp(-std::norm(beta) / (nbar + 1.0)) / (std::numbers::pi * (nbar + 1.0));
      CHECK(std::abs(project_coherent(s, 1, beta).density - q) < 1e-8);
    }
  }
  SUBCASE("truncation of the coherent ket") {
    const auto s = tensor(coherent_state(0.0, 3), thermal_state(0.1, 6, 1e-3));
    CHECK_THROWS_AS(project_coherent(s, 1, 3.0), TruncationError);
    CHECK_NOTHROW(project_coherent(s, 1, 3.0, 1.0));
  }
  SUBCASE("densities integrate to one") {
    // Radial Gauss-Legendre on |beta|; the inputs are phase covariant so one
    // phase per radius suffices.
    for (int which = 0; which < 2; ++which) {
      const double nbar = 0.5;
      const auto s = which == 0 ? tensor(coherent_state(0.0, 3), thermal_state(nbar, 70, 1e-9))
                                : epr_state(nbar, 60, 1e-12);
      const double rmax = std::sqrt((nbar + 1.0) * 30.0);
      const auto rule = qillum::quad::gauss_legendre(60, 0.0, rmax);
      double total = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double r = rule.nodes[k];
        total += rule.weights[k] * 2.0 * std::numbers::pi * r * project_coherent(s, 1, r, 1.0).density;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("block structure of mixtures") {
  const auto a = thermal_state(0.5, 6, 1e-1);
  const auto b = coherent_state(0.3, 6, 1e-3, true);
  const auto m = mix(a, b, 0.25);
  CHECK((m.to_dense() - (0.25 * a.to_dense() + 0.75 * b.to_dense())).cwiseAbs().maxCoeff() < 1e-15);
  const auto jb = joint_blocks(a, b);
  CHECK(jb.size() == 1);
  CHECK_THROWS_AS(mix(a, b, 1.2), DomainError);
}
