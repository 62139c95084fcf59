#include "qillum/cli.hpp"

#include "qillum/discord.hpp"
#include "qillum/experiments.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qillum::cli {
namespace {

struct Common {
  double epsilon = 0.1;
  double nbar_probe = 0.5;
  double nbar_env = 4.0;
  double p0 = 0.5;
  std::string probe = "epr";
  double squeezing = 0.0;
  std::string out;
  std::uint64_t seed = 1;
  int nodes = 0;
  std::vector<int> dims;
};

// "a:b:n" is n evenly spaced points from a to b; anything else is a comma list.
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> g;
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 + 1);
    const double a = std::stod(s.substr(0, c1));
    const double b = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    const int n = std::stoi(s.substr(c2 + 1));
    if (n < 1) throw DomainError("grid needs at least one point");
    if (n == 1) return {a};
    for (int k = 0; k < n; ++k) g.push_back(a + (b - a) * k / (n - 1));
    return g;
  }
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) g.push_back(std::stod(item));
  }
  return g;
}

std::vector<study::Quantity> parse_quantities(const std::string& s) {
  std::vector<study::Quantity> q;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "advantage_*") {
      q.push_back(study::Quantity::AdvantageQS);
      q.push_back(study::Quantity::AdvantageQC);
    } else if (!item.empty()) {
      q.push_back(study::parse_quantity(item));
    }
  }
  return q;
}

ScenarioParams scenario(const Common& c) {
  ScenarioParams p;
  p.epsilon = c.epsilon;
  p.nbar_probe = c.nbar_probe;
  p.nbar_env = c.nbar_env;
  p.p0 = c.p0;
  if (c.probe == "epr") {
    p.probe = EprProbe{};
  } else if (c.probe == "coherent") {
    p.probe = CoherentProbe{};
  } else if (c.probe == "squeezed") {
    p.probe = SqueezedProbe{c.squeezing};
  } else {
    throw DomainError("probe must be one of epr, coherent, squeezed");
  }
  p.validate();
  return p;
}

std::optional<scen::DimsPolicy> dims_override(const Common& c) {
  if (c.dims.empty()) return std::nullopt;
  if (c.dims.size() != 2 || c.dims[0] < 2 || c.dims[1] < 2) throw DomainError("--dims expects PROBE,DETECTOR cutoffs >= 2");
  return scen::DimsPolicy{c.dims[0], c.dims[1], 1e-3};
}

study::RunOptions run_options(const Common& c) {
  study::RunOptions o;
  if (!c.out.empty()) o.out_dir = c.out;
  return o;
}

void write_text(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) return;
  std::filesystem::create_directories(c.out);
  std::ofstream(std::filesystem::path(c.out) / name) << text;
}

void print_rows(std::ostream& out, const study::SweepResult& r) { out << study::to_csv(r); }

int sweep_status(const study::SweepResult& r, std::ostream& err) {
  if (r.all_converged()) return kExitOk;
  for (const auto& row : r.rows) {
    if (!row.converged) err << "unconverged at " << study::format_number(row.axis_value) << ": " << row.flags << '\n';
  }
  return kExitConvergence;
}

std::string show_config(const Common& c) {
  std::ostringstream os;
  os << "epsilon = " << study::format_number(c.epsilon) << '\n'
     << "nbar_probe = " << study::format_number(c.nbar_probe) << '\n'
     << "nbar_env = " << study::format_number(c.nbar_env) << '\n'
     << "p0 = " << study::format_number(c.p0) << '\n'
     << "probe = \"" << c.probe << "\"\n";
  if (c.probe == "squeezed") os << "squeezing = " << study::format_number(c.squeezing) << '\n';
  if (!c.dims.empty()) os << "dims = [" << c.dims[0] << ", " << c.dims[1] << "]\n";
  if (c.nodes > 0) os << "nodes = " << c.nodes << '\n';
  os << "seed = " << c.seed << '\n';
  if (!c.out.empty()) os << "out = \"" << c.out << "\"\n";
  return os.str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum illumination information and discord experiments", "qillum"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  Common c;
  app.set_config("--config", "", "TOML-style configuration file")->check(CLI::ExistingFile);
  auto* global = app.add_option_group("scenario");
  global->add_option("--epsilon", c.epsilon, "object reflectivity");
  global->add_option("--nbar_probe,--nbar", c.nbar_probe, "mean probe photon number");
  global->add_option("--nbar_env,--nenv", c.nbar_env, "mean environment photon number");
  global->add_option("--p0", c.p0, "prior of hypothesis 0 (no object)");
  global->add_option("--probe", c.probe, "epr, coherent or squeezed");
  global->add_option("--squeezing", c.squeezing, "squeezing r of the squeezed probe");
  global->add_option("--out", c.out, "artifact directory");
  global->add_option("--seed", c.seed, "random seed");
  global->add_option("--nodes", c.nodes, "starting node count of the upper-bound quadrature");
  global->add_option("--dims", c.dims, "fixed cutoffs PROBE,DETECTOR")->delimiter(',')->expected(2);

  std::string axis = "epsilon";
  std::string grid = "0:0.3:16";
  std::string quantities = "chi_q,chi_s,A_q_bounds,A_s_bounds";
  auto* sweep = app.add_subcommand("sweep", "parameter sweep with CSV and SVG output");
  sweep->add_option("--axis", axis, "epsilon, nbar_probe, t or squeezing_r");
  sweep->add_option("--grid", grid, "a:b:n or a comma list");
  sweep->add_option("--quantities", quantities, "comma list of quantities");

  std::string t_grid;
  auto* gd = app.add_subcommand("generaldyne", "chi_c and mixture discord over general-dyne measurements");
  gd->add_option("--grid", t_grid, "t values in (0, 1); default 0.05:0.95:19");

  study::PerturbationStudySpec pert;
  auto* perturb = app.add_subcommand("perturb", "random perturbations of the coherent probe");
  perturb->add_option("--samples", pert.n_samples, "number of samples");
  perturb->add_option("--eta", pert.eta, "perturbation norm");
  perturb->add_option("--keep", pert.keep_fraction, "fraction of samples kept");
  perturb->add_option("--bins", pert.bins, "histogram bins");

  std::string r_grid = "0:0.01:21";
  auto* squeezed = app.add_subcommand("squeezed", "single-mode lower bound over probe squeezing");
  squeezed->add_option("--grid", r_grid, "squeezing values");

  std::string e_grid = "0:1:11";
  auto* concavity = app.add_subcommand("concavity", "concavity of the single-mode lower bound in energy");
  concavity->add_option("--grid", e_grid, "energy grid");

  double tol = disc::kTheoremTol;
  auto* theorem = app.add_subcommand("theorem1", "consumed discord against the quantum advantage");
  theorem->add_option("--tol", tol, "equality tolerance in bits");

  auto* show = app.add_subcommand("show-config", "print the effective configuration");

  for (auto* sub : {sweep, gd, perturb, squeezed, concavity, theorem, show}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    const ScenarioParams params = scenario(c);
    const auto dims = dims_override(c);
    const auto options = run_options(c);

    if (*show) {
      out << show_config(c);
      return kExitOk;
    }
    if (*sweep) {
      study::SweepSpec spec;
      spec.axis = study::parse_axis(axis);
      spec.grid = parse_grid(grid);
      spec.fixed = params;
      spec.quantities = parse_quantities(quantities);
      spec.dims = dims;
      spec.nodes = c.nodes;
      const auto r = study::run_sweep(spec, options);
      print_rows(out, r);
      return sweep_status(r, err);
    }
    if (*gd) {
      const auto g = t_grid.empty() ? study::default_t_grid() : parse_grid(t_grid);
      const auto r = study::run_generaldyne_scan(params, g, options);
      print_rows(out, r.sweep);
      out << "argmax chi_c: t = " << study::format_number(r.t_argmax_chi_c) << '\n'
          << "argmin mixture discord: t = " << study::format_number(r.t_argmin_delta) << '\n'
          << "max |chi_c(t) - chi_c(1 - t)| = " << study::format_number(r.max_asymmetry) << '\n';
      return sweep_status(r.sweep, err);
    }
    if (*perturb) {
      pert.seed = c.seed;
      ScenarioParams p = params;
      p.probe = CoherentProbe{};
      const auto r = study::run_perturbation_study(pert, p);
      std::ostringstream hist;
      hist << "bin_lo,bin_hi,count\n";
      for (std::size_t b = 0; b < r.histogram.counts.size(); ++b) {
        hist << study::format_number(r.histogram.edges[b]) << ',' << study::format_number(r.histogram.edges[b + 1]) << ','
             << r.histogram.counts[b] << '\n';
      }
      write_text(c, "perturbation_histogram.csv", hist.str());
      out << "reference chi_s = " << study::format_number(r.reference) << '\n'
          << "kept = " << r.kept.size() << ", rejected draws = " << r.rejected << '\n'
          << "above reference = " << r.exceeding << " (" << study::format_number(r.exceed_fraction()) << ")\n"
          << "best = " << study::format_number(r.kept.front()) << '\n';
      return kExitOk;
    }
    if (*squeezed) {
      const auto r = study::run_squeezed_scan(params, parse_grid(r_grid), options);
      print_rows(out, r.sweep);
      out << "argmax r = " << study::format_number(r.r_argmax) << ", relative improvement = "
          << study::format_number(r.improvement) << '\n';
      return sweep_status(r.sweep, err);
    }
    if (*concavity) {
      const auto r = study::run_concavity_check(params, parse_grid(e_grid), options);
      for (const auto& curve : r.curves) {
        out << "epsilon = " << study::format_number(curve.epsilon)
            << ": max second difference = " << study::format_number(curve.max_second_difference) << '\n';
      }
      out << (r.concave ? "concave" : "NOT concave") << ", scaled gaps "
          << (r.gaps_shrink ? "shrink" : "do not shrink") << '\n';
      return r.concave ? kExitOk : kExitCheckFailed;
    }
    if (*theorem) {
      const auto r = disc::theorem1_check(params, tol);
      out << "consumed discord = " << study::format_number(r.consumed) << '\n'
          << "chi_q - chi_c = " << study::format_number(r.chi_q - r.chi_c) << '\n'
          << "residual = " << study::format_number(r.residual) << '\n'
          << (r.pass ? "PASS" : "FAIL: " + r.failure) << '\n';
      return r.pass ? kExitOk : kExitCheckFailed;
    }
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace qillum::cli
