// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// An optional argument names a directory for the CSV/SVG artifacts.

#include "qillum/discord.hpp"
#include "qillum/experiments.hpp"
#include "qillum/gaussian.hpp"
#include "qillum/info.hpp"
#include "qillum/quadrature.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

using namespace qillum;
using namespace qillum::study;

namespace {

constexpr double kOrderTol = 1e-8;

ScenarioParams base(double eps, double nbar) {
  ScenarioParams p;
  p.epsilon = eps;
  p.nbar_probe = nbar;
  p.nbar_env = 4.0;
  return p;
}

std::vector<double> eps_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 15; ++k) g.push_back(0.02 * k);
  return g;
}

struct Columns {
  enum { ChiQ, ChiS, ChiC, AqLo, AqUp, AsLo, AsUp };
};

RunOptions options(const char* out, const std::string& stem) {
  RunOptions o;
  if (out) o.out_dir = std::string(out);
  o.stem = stem;
  return o;
}

// Reflectivity sweeps for both probe energies, computed once and shared by criteria 1, 2, 3, 5, 9.
struct EpsSweeps {
  SweepResult low;  // nbar = 0.01
  SweepResult high;  // nbar = 0.5
};

EpsSweeps eps_sweeps(const char* out) {
  SweepSpec s;
  s.axis = Axis::Epsilon;
  s.grid = eps_grid();
  s.quantities = {Quantity::ChiQ, Quantity::ChiS, Quantity::ChiC, Quantity::AqBounds, Quantity::AsBounds};
  EpsSweeps f;
  s.fixed = base(0.1, 0.01);
  f.low = run_sweep(s, options(out, "eps_sweep_nbar0.01"));
  s.fixed = base(0.1, 0.5);
  f.high = run_sweep(s, options(out, "eps_sweep_nbar0.5"));
  return f;
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void guarded(int id, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "  (criterion %d: %.1f s)\n", id, s);
}

std::string fmt(double v) { return format_number(v); }

bool rows_clean(const SweepResult& r) {
  for (const auto& row : r.rows) {
    if (!row.converged || !row.flags.empty()) return false;
  }
  return true;
}

// Heterodyne outcome density on the idler: Fock projections against the thermal marginal.
double heterodyne_tv(const ScenarioParams& p) {
  const auto pair = scen::build_pair(p);
  const double n = p.nbar_probe;
  const double rmax = std::sqrt((n + 1.0) * std::log(1e12));
  const auto rule = quad::gauss_legendre(64, 0.0, rmax);
  double tv = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double r = rule.nodes[k];
    const double fock_density = fock::project_coherent(pair.rho0, 1, r, 1.0).density;
    const double exact = std::exp(-r * r / (n + 1.0)) / (std::numbers::pi * (n + 1.0));
    tv += rule.weights[k] * 2.0 * std::numbers::pi * r * std::abs(fock_density - exact);
    mass += rule.weights[k] * 2.0 * std::numbers::pi * r * fock_density;
  }
  return 0.5 * (tv + std::abs(1.0 - mass));
}

}  // namespace

int main(int argc, char** argv) {
  const char* out = argc > 1 ? argv[1] : nullptr;
  EpsSweeps f;
  bool have_sweeps = false;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    f = eps_sweeps(out);
    have_sweeps = true;
  } catch (const std::exception& e) {
    std::printf("reflectivity sweeps failed: %s\n", e.what());
  }
  std::fprintf(stderr, "  (reflectivity sweeps: %.1f s)\n",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  const auto need_sweeps = [&] {
    if (!have_sweeps) throw std::runtime_error("reflectivity sweeps unavailable");
  };

  guarded(1, [&] {
    need_sweeps();
    bool ok = rows_clean(f.low) && rows_clean(f.high);
    double min_chi = 1e300;
    double min_acc = 1e300;
    for (const auto* r : {&f.low, &f.high}) {
      for (const auto& row : r->rows) {
        const auto& v = row.values;
        ok = ok && v[Columns::ChiQ] > v[Columns::ChiS] && v[Columns::AqLo] > v[Columns::AsUp];
        min_chi = std::min(min_chi, v[Columns::ChiQ] - v[Columns::ChiS]);
        min_acc = std::min(min_acc, v[Columns::AqLo] - v[Columns::AsUp]);
      }
    }
    report(1, ok, "min(chi_q - chi_s) = " + fmt(min_chi) + ", min(A_q_lower - A_s_upper) = " + fmt(min_acc));
  });

  guarded(2, [&] {
    need_sweeps();
    double worst = 0.0;
    for (const auto* r : {&f.low, &f.high}) {
      for (const auto& row : r->rows) {
        const auto& v = row.values;
        worst = std::max(worst, (v[Columns::AqUp] - v[Columns::AqLo]) / v[Columns::AqLo]);
      }
    }
    report(2, worst <= 0.01, "max A_q gap = " + fmt(100.0 * worst) + " %");
  });

  guarded(3, [&] {
    need_sweeps();
    double worst = 0.0;
    for (const auto* r : {&f.low, &f.high}) {
      for (const auto& row : r->rows) {
        const auto& v = row.values;
        worst = std::max(worst, std::abs(v[Columns::AsUp] - v[Columns::AsLo]) / v[Columns::AsLo]);
      }
    }
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& row : f.high.rows) {
      const auto& v = row.values;
      const double gap = (v[Columns::ChiS] - v[Columns::AsUp]) / v[Columns::ChiS];
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    const bool ok = worst <= 5e-6 && lo >= 0.002 && hi <= 0.006;
    report(3, ok, "max A_s bound spread = " + fmt(worst) + " relative; chi_s vs A_s gap in [" + fmt(100.0 * lo) + ", " +
                      fmt(100.0 * hi) + "] %");
  });

  guarded(4, [&] {
    bool ok = true;
    double worst = 0.0;
    std::string detail;
    for (const auto& [eps, nbar] : std::vector<std::pair<double, double>>{{0.1, 0.01}, {0.1, 0.1}, {0.1, 0.5}, {0.3, 0.5}}) {
      const auto r = disc::theorem1_check(base(eps, nbar));
      ok = ok && r.pass;
      worst = std::max(worst, r.residual);
      if (!r.pass) detail += " [eps=" + fmt(eps) + ", nbar=" + fmt(nbar) + ": " + r.failure + "]";
    }
    report(4, ok, "max |consumed - (chi_q - chi_c)| = " + fmt(worst) + " bits" + detail);
  });

  guarded(5, [&] {
    need_sweeps();
    auto rel = [](const ResultRow& row) {
      const auto& v = row.values;
      const double qc = v[Columns::ChiQ] - v[Columns::ChiC];
      const double qs = v[Columns::ChiQ] - v[Columns::ChiS];
      return (qc - qs) / qs;
    };
    auto monotone = [&](const SweepResult& r) {
      for (std::size_t i = 1; i < r.rows.size(); ++i) {
        if (!(rel(r.rows[i]) > rel(r.rows[i - 1]))) return false;
      }
      return true;
    };
    const double high = rel(f.high.rows.back());
    const double low = rel(f.low.rows.back());
    const bool ok = std::abs(high - 0.013) <= 0.005 && std::abs(low - 5e-5) <= 1e-4 && monotone(f.high) && monotone(f.low);
    report(5, ok, "at eps = 0.3: " + fmt(100.0 * high) + " % (nbar 0.5), " + fmt(100.0 * low) +
                      " % (nbar 0.01); monotone: " + (monotone(f.high) && monotone(f.low) ? "yes" : "no"));
  });

  guarded(6, [&] {
    const auto scan = run_generaldyne_scan(base(0.1, 0.5), default_t_grid(), options(out, "generaldyne"));
    const double half_step = 0.025;
    const bool ok = std::abs(scan.t_argmax_chi_c - 0.5) <= half_step && std::abs(scan.t_argmin_delta - 0.5) <= half_step &&
                    scan.max_asymmetry <= 1e-8 && rows_clean(scan.sweep);
    report(6, ok, "argmax chi_c t = " + fmt(scan.t_argmax_chi_c) + ", argmin mixture discord t = " +
                      fmt(scan.t_argmin_delta) + ", asymmetry " + fmt(scan.max_asymmetry));
  });

  guarded(7, [&] {
    ScenarioParams p = base(0.1, 0.5);
    p.probe = CoherentProbe{};
    std::vector<double> r;
    for (int k = 0; k <= 20; ++k) r.push_back(0.0005 * k);
    const auto scan = run_squeezed_scan(p, r, options(out, "squeezed"));
    const bool ok = scan.r_argmax > 0.0 && scan.r_argmax < 0.01 && scan.improvement > 0.0 && scan.improvement < 1e-4;
    report(7, ok, "r* = " + fmt(scan.r_argmax) + ", relative improvement = " + fmt(scan.improvement));
  });

  guarded(8, [&] {
    ScenarioParams p = base(0.5, 0.5);
    p.probe = CoherentProbe{};
    PerturbationStudySpec spec;
    const auto r = run_perturbation_study(spec, p);
    report(8, r.exceeding > 0,
           fmt(r.exceeding) + " of " + fmt(static_cast<double>(r.kept.size())) + " kept samples above chi_s = " +
               fmt(r.reference) + "; best " + fmt(r.kept.front()));
  });

  guarded(9, [&] {
    // Fock against Gaussian entropies on the pipeline states, under the same refinement as the pipeline.
    double entropy_err = 0.0;
    for (double eps : {0.02, 0.1, 0.3}) {
      for (double nbar : {0.01, 0.5}) {
        for (const Probe& probe : std::vector<Probe>{EprProbe{}, CoherentProbe{}, SqueezedProbe{0.003}}) {
          ScenarioParams p = base(eps, nbar);
          p.probe = probe;
          const auto pair = scen::build_pair(p);
          for (int h : {0, 1}) {
            const auto fock_entropy = scen::refine_truncation(p, [&](const scen::EncodedPair& q) {
              return fock::von_neumann_entropy(h == 0 ? q.rho0 : q.rho1);
            });
            const double exact = gauss::gaussian_entropy(h == 0 ? *pair.gauss0 : *pair.gauss1);
            entropy_err = std::max(entropy_err, std::abs(fock_entropy.value - exact));
          }
        }
      }
    }
    // Commuting pair: both bounds collapse onto the Holevo information.
    const auto a = fock::thermal_state(0.5, 60);
    const auto b = fock::thermal_state(1.5, 60);
    const double chi = info::holevo(a, b, 0.5);
    const double lower = info::fuchs_lower(a, b, 0.5).value;
    const double upper = info::fuchs_upper(a, b, 0.5).value;
    const double commuting_err = std::max(std::abs(lower - chi), std::abs(upper - chi));
    // Heterodyne collapse.
    double tv = 0.0;
    for (double nbar : {0.01, 0.5}) tv = std::max(tv, heterodyne_tv(base(0.1, nbar)));
    // Ordering on every sweep point.
    bool ordered = have_sweeps;
    if (have_sweeps) {
      for (const auto* r : {&f.low, &f.high}) {
        for (const auto& row : r->rows) {
          const auto& v = row.values;
          ordered = ordered && v[Columns::AqLo] <= v[Columns::AqUp] + kOrderTol && v[Columns::AqUp] <= v[Columns::ChiQ] + kOrderTol;
          ordered = ordered && v[Columns::AsLo] <= v[Columns::AsUp] + kOrderTol && v[Columns::AsUp] <= v[Columns::ChiS] + kOrderTol;
        }
      }
    }
    const bool ok = entropy_err <= 1e-6 && commuting_err <= 1e-6 && tv <= 1e-4 && ordered;
    report(9, ok, "entropy " + fmt(entropy_err) + ", commuting " + fmt(commuting_err) + ", heterodyne TV " + fmt(tv) +
                      ", ordering " + (ordered ? "ok" : "violated"));
  });

  guarded(10, [&] {
    const auto r = run_concavity_check(base(0.1, 0.5), default_energy_grid(), options(out, "concavity"));
    double worst = -1e300;
    for (const auto& c : r.curves) worst = std::max(worst, c.max_second_difference);
    report(10, r.concave, "max second difference = " + fmt(worst) + (r.gaps_shrink ? ", scaled gaps shrink" : ""));
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
