#pragma once

// Parameter sweeps and the probe studies: result rows, CSV/SVG emission and
// a content-hashed JSON cache of evaluated grid points.

#include "qillum/params.hpp"
#include "qillum/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qillum::study {

enum class Axis { Epsilon, NbarProbe, T, SqueezingR };

enum class Quantity {
  ChiQ,  ///< Holevo information, EPR probe
  ChiS,  ///< Holevo information, single-mode probe
  ChiC,  ///< EPR probe with a local idler measurement
  AqBounds,
  AsBounds,
  AsLower,  ///< lower bound only; skips the upper-bound quadrature
  AcBounds,
  DeltaCon,  ///< consumed Gaussian discord
  DeltaMixture,  ///< Gaussian discord of the prior mixture
  AdvantageQS,  ///< chi_q - chi_s
  AdvantageQC,  ///< chi_q - chi_c
};

std::string axis_name(Axis a);
Axis parse_axis(const std::string& s);
std::string quantity_name(Quantity q);
Quantity parse_quantity(const std::string& s);
/// CSV columns of a quantity; bounds expand to _lower and _upper.
std::vector<std::string> quantity_columns(Quantity q);

struct SweepSpec {
  Axis axis = Axis::Epsilon;
  std::vector<double> grid;
  ScenarioParams fixed;
  std::vector<Quantity> quantities;
  std::optional<scen::DimsPolicy> dims;  ///< fixed cutoffs instead of refinement
  int nodes = 0;  ///< upper-bound quadrature start; 0 = default

  /// Grid non-empty, strictly increasing and inside the axis domain; the
  /// quantities make sense on the axis.
  void validate() const;
  /// Fixed parameters with the axis set to `value`.
  ScenarioParams at(double value) const;
  std::vector<std::string> columns() const;
};

struct ResultRow {
  double axis_value = 0.0;
  std::vector<double> values;  ///< one per SweepSpec::columns()
  int probe_dim = 0;
  int detector_dim = 0;
  bool converged = true;
  std::string flags;  ///< empty when the row is clean
};

struct SweepResult {
  SweepSpec spec;
  std::vector<ResultRow> rows;
  std::size_t cache_hits = 0;

  bool all_converged() const;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  ///< CSV and SVG destination
  std::optional<std::filesystem::path> cache_dir;  ///< QILLUM_CACHE_DIR overrides the default
  bool use_cache = true;
  std::string stem = "sweep";
};

/// Cache directory: QILLUM_CACHE_DIR, else options.cache_dir, else
/// out_dir/.cache; nullopt disables caching.
std::optional<std::filesystem::path> cache_location(const RunOptions& options);

ResultRow evaluate_point(const SweepSpec& spec, double value);
SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Serialization

/// 12 significant digits, '.' decimal point, locale independent.
std::string format_number(double v);
std::string to_csv(const SweepResult& r);
/// Header names: axis, columns..., probe_dim, detector_dim, converged, flags.
std::vector<std::string> csv_header(const SweepSpec& spec);
/// Header and row count check against the spec.
bool csv_matches_schema(const std::string& csv, const SweepSpec& spec);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
/// Self-contained SVG line plot.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::vector<Series>& series);
/// One SVG per quantity group (information, discord, advantage) present in r.
std::vector<std::pair<std::string, std::string>> svg_groups(const SweepResult& r);

std::uint64_t fnv1a(const std::string& s);
/// Cache key: content hash of the point parameters, quantities and code version.
std::string point_key(const SweepSpec& spec, double value);

// ---------------------------------------------------------------------------
// Studies

struct GeneraldyneScan {
  SweepResult sweep;  ///< columns chi_c, delta_mixture
  double t_argmax_chi_c = 0.0;
  double t_argmin_delta = 0.0;
  double max_asymmetry = 0.0;  ///< max |chi_c(t) - chi_c(1 - t)| over mirrored grid pairs
};
/// 19-point default grid 0.05, 0.10, ..., 0.95.
std::vector<double> default_t_grid();
GeneraldyneScan run_generaldyne_scan(const ScenarioParams& params, const std::vector<double>& t_grid,
                                     const RunOptions& options = {});

struct PerturbationStudySpec {
  int n_samples = 10000;
  double eta = 1e-2;
  std::uint64_t seed = 1;
  double keep_fraction = 0.5;
  int bins = 40;

  void validate() const;
};

struct Histogram {
  std::vector<double> edges;  ///< bins + 1
  std::vector<int> counts;
  int total() const;
};

struct PerturbationResult {
  double reference = 0.0;  ///< Holevo information of the unperturbed coherent probe
  std::vector<double> kept;  ///< Holevo values of the kept samples, descending
  Histogram histogram;
  int rejected = 0;  ///< draws whose photon number could not be restored
  int exceeding = 0;  ///< kept samples strictly above the reference
  double exceed_fraction() const;
};

/// Perturbed probe vector for sample `index`: a random complex direction of
/// norm eta, component n drawn as |psi_n| times a standard complex normal,
/// then renormalized, with the mean photon number restored to nbar by
/// the tilt psi_n -> s^n psi_n. nullopt when no tilt in [1/4, 4] restores it.
std::optional<fock::Vec> perturbed_probe(const fock::Vec& psi, double nbar, double eta, std::uint64_t seed,
                                         std::uint64_t index);
PerturbationResult run_perturbation_study(const PerturbationStudySpec& spec, const ScenarioParams& params);

struct SqueezedScan {
  SweepResult sweep;  ///< column A_s_lower over squeezing_r
  double reference = 0.0;  ///< coherent-probe lower bound (r = 0)
  double r_argmax = 0.0;
  double improvement = 0.0;  ///< (best - reference) / reference
};
SqueezedScan run_squeezed_scan(const ScenarioParams& params, const std::vector<double>& r_grid,
                               const RunOptions& options = {});

struct ConcavityCurve {
  double epsilon = 0.0;
  std::vector<double> energy;
  std::vector<double> lower;  ///< A_s lower bound
  std::vector<double> scaled;  ///< lower / epsilon
  double max_second_difference = 0.0;
};
struct ConcavityResult {
  std::vector<ConcavityCurve> curves;  ///< one per epsilon in {1/2, 1/10, 1/100}
  std::vector<double> pairwise_gaps;  ///< max |scaled_i - scaled_{i+1}| for consecutive curves
  bool concave = false;  ///< every second difference <= 1e-9
  bool gaps_shrink = false;
};
std::vector<double> default_energy_grid();
ConcavityResult run_concavity_check(const ScenarioParams& params, const std::vector<double>& energy_grid,
                                    const RunOptions& options = {});

}  // namespace qillum::study
