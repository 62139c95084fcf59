#include "qillum/experiments.hpp"

#include "qillum/discord.hpp"
#include "qillum/info.hpp"
#include "qillum/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace qillum::study {
namespace {

using json = nlohmann::json;

constexpr const char* kCodeVersion = "qillum-2";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kConcavityTol = 1e-9;

const std::vector<std::pair<Axis, std::string>>& axis_names() {
  static const std::vector<std::pair<Axis, std::string>> names{
      {Axis::Epsilon, "epsilon"}, {Axis::NbarProbe, "nbar_probe"}, {Axis::T, "t"}, {Axis::SqueezingR, "squeezing_r"}};
  return names;
}

const std::vector<std::pair<Quantity, std::string>>& quantity_names() {
  static const std::vector<std::pair<Quantity, std::string>> names{
      {Quantity::ChiQ, "chi_q"},           {Quantity::ChiS, "chi_s"},
      {Quantity::ChiC, "chi_c"},           {Quantity::AqBounds, "A_q_bounds"},
      {Quantity::AsBounds, "A_s_bounds"},  {Quantity::AsLower, "A_s_lower"},
      {Quantity::AcBounds, "A_c_bounds"},  {Quantity::DeltaCon, "delta_con"},
      {Quantity::DeltaMixture, "delta_mixture"}, {Quantity::AdvantageQS, "advantage_qs"},
      {Quantity::AdvantageQC, "advantage_qc"}};
  return names;
}

bool allowed_on(Axis axis, Quantity q) {
  switch (axis) {
    case Axis::T: return q == Quantity::ChiC || q == Quantity::DeltaMixture;
    case Axis::SqueezingR: return q == Quantity::ChiS || q == Quantity::AsBounds || q == Quantity::AsLower;
    default: return true;
  }
}

ScenarioParams with_probe(ScenarioParams p, Probe probe) {
  p.probe = std::move(probe);
  return p;
}

// Single-mode probe for the _s quantities: the configured one unless it is EPR.
ScenarioParams single_mode(const ScenarioParams& p) {
  if (p.has_idler()) return with_probe(p, CoherentProbe{});
  return p;
}

ScenarioParams epr(const ScenarioParams& p) { return with_probe(p, EprProbe{}); }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string group_of(const std::string& column) {
  if (column.rfind("delta", 0) == 0) return "discord";
  if (column.rfind("advantage", 0) == 0) return "advantage";
  return "information";
}

// Per-point evaluator; caches the Holevo values shared by several columns.
class PointEvaluator {
public:
  PointEvaluator(const SweepSpec& spec, double value) : spec_(spec), value_(value), params_(spec.at(value)) {}

  ResultRow run() {
    ResultRow row;
    row.axis_value = value_;
    for (auto q : spec_.quantities) {
      const auto cols = quantity_columns(q);
      std::vector<double> vals(cols.size(), kNaN);
      try {
        vals = evaluate(q);
      } catch (const ConvergenceError& e) {
        converged_ = false;
        add_flag("unconverged " + quantity_name(q) + ": " + e.what());
      } catch (const std::exception& e) {
        add_flag("error " + quantity_name(q) + ": " + e.what());
      }
      row.values.insert(row.values.end(), vals.begin(), vals.end());
    }
    row.probe_dim = dims_.probe_dim;
    row.detector_dim = dims_.detector_dim;
    row.converged = converged_;
    row.flags = flags_;
    return row;
  }

private:
  void add_flag(const std::string& f) {
    if (!flags_.empty()) flags_ += "; ";
    flags_ += f;
  }

  void note(const scen::DimsPolicy& d, bool converged) {
    if (d.probe_dim * d.detector_dim > dims_.probe_dim * dims_.detector_dim) dims_ = d;
    if (!converged) {
      converged_ = false;
      add_flag("truncation refinement did not converge");
    }
  }

  int nodes() const { return spec_.nodes > 0 ? spec_.nodes : info::kDefaultUpperNodes; }

  double holevo_of(const ScenarioParams& p) {
    if (spec_.dims) {
      note(*spec_.dims, true);
      return info::holevo(scen::build_pair(p, *spec_.dims), p.p0);
    }
    const auto r = scen::refine_truncation(p, [&](const scen::EncodedPair& pair) { return info::holevo(pair, p.p0); });
    note(r.dims, r.converged);
    return r.value;
  }

  info::InfoReport report_of(const ScenarioParams& p) {
    if (spec_.dims) {
      note(*spec_.dims, true);
      return info::info_report(scen::build_pair(p, *spec_.dims), p.p0, nodes());
    }
    auto r = info::info_report_refined(p, nodes());
    scen::DimsPolicy d;
    d.probe_dim = r.truncation.dims.size() > 1 ? r.truncation.dims[1] : 0;
    d.detector_dim = r.truncation.dims[0];
    note(d, r.converged);
    return r;
  }

  double chi_q() {
    if (!chi_q_) chi_q_ = holevo_of(epr(params_));
    return *chi_q_;
  }
  double chi_s() {
    if (!chi_s_) chi_s_ = holevo_of(single_mode(params_));
    return *chi_s_;
  }
  double chi_c() {
    if (!chi_c_) {
      if (spec_.axis == Axis::T) {
        local();
      } else {
        const auto r = info::integrated_local_info(epr(params_), false);
        if (!r.converged) note(dims_, false);
        chi_c_ = r.holevo;
      }
    }
    return *chi_c_;
  }

  // General-dyne point: one conditional ensemble serves chi_c and the mixture discord.
  void local() {
    const auto p = epr(spec_.fixed);
    const auto dims = spec_.dims.value_or(scen::initial_dims(p));
    note(dims, true);
    const auto pair = scen::build_pair(p, dims);
    const auto e = info::local_ensemble(pair, p.p0, value_);
    chi_c_ = info::local_holevo(e, p.p0);
    double integral = 0.0;
    for (const auto& n : e.nodes) integral += n.weight * n.entropy_mix;
    const double s_idler = gauss::gaussian_entropy(pair.gauss0->reduced(1));
    delta_mixture_ = s_idler - fock::von_neumann_entropy(fock::mix(pair.rho0, pair.rho1, p.p0)) + integral;
  }

  std::vector<double> evaluate(Quantity q) {
    switch (q) {
      case Quantity::ChiQ: return {chi_q()};
      case Quantity::ChiS: return {chi_s()};
      case Quantity::ChiC: return {chi_c()};
      case Quantity::AqBounds: {
        const auto r = report_of(epr(params_));
        return {r.fuchs_lower, r.fuchs_upper};
      }
      case Quantity::AsBounds: {
        const auto r = report_of(single_mode(params_));
        return {r.fuchs_lower, r.fuchs_upper};
      }
      case Quantity::AsLower: {
        const auto p = single_mode(params_);
        if (spec_.dims) {
          note(*spec_.dims, true);
          const auto pair = scen::build_pair(p, *spec_.dims);
          return {info::fuchs_lower(pair.rho0, pair.rho1, p.p0).value};
        }
        const auto r = scen::refine_truncation(
            p, [&](const scen::EncodedPair& pair) { return info::fuchs_lower(pair.rho0, pair.rho1, p.p0).value; });
        note(r.dims, r.converged);
        return {r.value};
      }
      case Quantity::AcBounds: {
        const auto r = info::integrated_local_info(epr(params_), true);
        if (!r.converged) note(dims_, false);
        return {r.fuchs_lower, r.fuchs_upper};
      }
      case Quantity::DeltaCon: return {disc::consumed_discord(epr(params_)).consumed};
      case Quantity::DeltaMixture:
        if (spec_.axis == Axis::T) {
          if (!delta_mixture_) local();
          return {*delta_mixture_};
        }
        return {disc::discord_mixture(epr(params_)).value};
      case Quantity::AdvantageQS: return {chi_q() - chi_s()};
      case Quantity::AdvantageQC: return {chi_q() - chi_c()};
    }
    return {kNaN};
  }

  const SweepSpec& spec_;
  double value_;
  ScenarioParams params_;
  scen::DimsPolicy dims_{0, 0, 1e-3};
  bool converged_ = true;
  std::string flags_;
  std::optional<double> chi_q_, chi_s_, chi_c_, delta_mixture_;
};

json row_to_json(const ResultRow& r) {
  json values = json::array();
  for (double v : r.values) values.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  return {{"axis_value", r.axis_value}, {"values", values},         {"probe_dim", r.probe_dim},
          {"detector_dim", r.detector_dim}, {"converged", r.converged}, {"flags", r.flags}};
}

ResultRow row_from_json(const json& j) {
  ResultRow r;
  r.axis_value = j.at("axis_value").get<double>();
  for (const auto& v : j.at("values")) r.values.push_back(v.is_null() ? kNaN : v.get<double>());
  r.probe_dim = j.at("probe_dim").get<int>();
  r.detector_dim = j.at("detector_dim").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.flags = j.at("flags").get<std::string>();
  return r;
}

std::string canonical_point(const SweepSpec& spec, double value) {
  json j;
  j["version"] = kCodeVersion;
  j["axis"] = axis_name(spec.axis);
  j["value"] = format_number(value) + "|" + std::to_string(std::bit_cast<std::uint64_t>(value));
  const auto p = spec.at(value);
  j["epsilon"] = p.epsilon;
  j["nbar_probe"] = p.nbar_probe;
  j["nbar_env"] = p.nbar_env;
  j["p0"] = p.p0;
  j["probe"] = probe_name(p.probe);
  if (const auto* sq = std::get_if<SqueezedProbe>(&p.probe)) j["squeezing_r"] = sq->r;
  json q = json::array();
  for (auto x : spec.quantities) q.push_back(quantity_name(x));
  j["quantities"] = q;
  if (spec.dims) j["dims"] = {spec.dims->probe_dim, spec.dims->detector_dim};
  j["nodes"] = spec.nodes;
  return j.dump();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::vector<double> column_values(const SweepResult& r, std::size_t col) {
  std::vector<double> v;
  for (const auto& row : r.rows) v.push_back(row.values[col]);
  return v;
}

std::vector<double> axis_values(const SweepResult& r) {
  std::vector<double> v;
  for (const auto& row : r.rows) v.push_back(row.axis_value);
  return v;
}

void emit(const SweepResult& r, const RunOptions& options) {
  if (!options.out_dir) return;
  write_file(*options.out_dir / (options.stem + ".csv"), to_csv(r));
  for (const auto& [group, svg] : svg_groups(r)) write_file(*options.out_dir / (options.stem + "_" + group + ".svg"), svg);
}

}  // namespace

std::string axis_name(Axis a) {
  for (const auto& [k, v] : axis_names()) {
    if (k == a) return v;
  }
  return "?";
}

Axis parse_axis(const std::string& s) {
  for (const auto& [k, v] : axis_names()) {
    if (v == s) return k;
  }
  throw DomainError("unknown sweep axis '" + s + "'");
}

std::string quantity_name(Quantity q) {
  for (const auto& [k, v] : quantity_names()) {
    if (k == q) return v;
  }
  return "?";
}

Quantity parse_quantity(const std::string& s) {
  for (const auto& [k, v] : quantity_names()) {
    if (v == s) return k;
  }
  throw DomainError("unknown quantity '" + s + "'");
}

std::vector<std::string> quantity_columns(Quantity q) {
  switch (q) {
    case Quantity::AqBounds: return {"A_q_lower", "A_q_upper"};
    case Quantity::AsBounds: return {"A_s_lower", "A_s_upper"};
    case Quantity::AcBounds: return {"A_c_lower", "A_c_upper"};
    default: return {quantity_name(q)};
  }
}

void SweepSpec::validate() const {
  if (grid.empty()) throw DomainError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("sweep grid must be strictly increasing");
  }
  if (quantities.empty()) throw DomainError("sweep has no quantities");
  for (auto q : quantities) {
    if (!allowed_on(axis, q)) {
      throw DomainError("quantity " + quantity_name(q) + " is not defined on the " + axis_name(axis) + " axis");
    }
  }
  for (double v : grid) {
    if (axis == Axis::T && !(v > 0.0 && v < 1.0)) throw DomainError("t must lie in the open interval (0, 1)");
    at(v).validate();
  }
}

ScenarioParams SweepSpec::at(double value) const {
  ScenarioParams p = fixed;
  switch (axis) {
    case Axis::Epsilon: p.epsilon = value; break;
    case Axis::NbarProbe: p.nbar_probe = value; break;
    case Axis::T: break;
    case Axis::SqueezingR: p.probe = SqueezedProbe{value}; break;
  }
  return p;
}

std::vector<std::string> SweepSpec::columns() const {
  std::vector<std::string> out;
  for (auto q : quantities) {
    for (auto& c : quantity_columns(q)) out.push_back(std::move(c));
  }
  return out;
}

bool SweepResult::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.converged; });
}

std::optional<std::filesystem::path> cache_location(const RunOptions& options) {
  if (!options.use_cache) return std::nullopt;
  if (const char* env = std::getenv("QILLUM_CACHE_DIR"); env != nullptr && *env != '\0') return std::filesystem::path(env);
  if (options.cache_dir) return options.cache_dir;
  if (options.out_dir) return *options.out_dir / ".cache";
  return std::nullopt;
}

ResultRow evaluate_point(const SweepSpec& spec, double value) { return PointEvaluator(spec, value).run(); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string point_key(const SweepSpec& spec, double value) { return hex(fnv1a(canonical_point(spec, value))); }

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options) {
  spec.validate();
  SweepResult result;
  result.spec = spec;
  const bool custom = std::holds_alternative<CustomProbe>(spec.fixed.probe);
  const auto cache = custom ? std::nullopt : cache_location(options);

  struct Outcome {
    ResultRow row;
    bool hit = false;
  };
  const auto outcomes = parallel_map<Outcome>(spec.grid.size(), [&](std::size_t i) {
    const double v = spec.grid[i];
    if (cache) {
      const auto path = *cache / (point_key(spec, v) + ".json");
      std::ifstream in(path);
      if (in) {
        try {
          const json j = json::parse(in);
          if (j.at("point").get<std::string>() == canonical_point(spec, v)) return Outcome{row_from_json(j.at("row")), true};
        } catch (const json::exception&) {
          // Unreadable entries are recomputed and overwritten.
        }
      }
    }
    return Outcome{evaluate_point(spec, v), false};
  });
  // Single writer, grid order.
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.hit) {
      ++result.cache_hits;
    } else if (cache) {
      const json j{{"point", canonical_point(spec, spec.grid[i])}, {"row", row_to_json(o.row)}};
      write_file(*cache / (point_key(spec, spec.grid[i]) + ".json"), j.dump(1));
    }
    result.rows.push_back(o.row);
  }
  emit(result, options);
  return result;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

std::vector<std::string> csv_header(const SweepSpec& spec) {
  std::vector<std::string> h{axis_name(spec.axis)};
  for (auto& c : spec.columns()) h.push_back(std::move(c));
  for (const char* m : {"probe_dim", "detector_dim", "converged", "flags"}) h.emplace_back(m);
  return h;
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream os;
  const auto header = csv_header(r.spec);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : r.rows) {
    os << format_number(row.axis_value);
    for (double v : row.values) os << ',' << format_number(v);
    std::string flags = row.flags;
    std::replace(flags.begin(), flags.end(), ',', ';');
    std::replace(flags.begin(), flags.end(), '\n', ' ');
    os << ',' << row.probe_dim << ',' << row.detector_dim << ',' << (row.converged ? 1 : 0) << ',' << flags << '\n';
  }
  return os.str();
}

bool csv_matches_schema(const std::string& csv, const SweepSpec& spec) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return false;
  const auto header = csv_header(spec);
  std::string expected;
  for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
  if (line != expected) return false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) != header.size() - 1) return false;
    ++rows;
  }
  return rows == spec.grid.size();
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::vector<Series>& series) {
  constexpr double W = 720, H = 440, L = 90, R = 180, T = 40, B = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << format_number(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << format_number(yv) << "</text>\n";
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape_xml(xlabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* c = colors[s % 8];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (std::isfinite(series[s].y[i])) os << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 16 + 18.0 * s;
    os << "<line x1=\"" << W - R + 12 << "\" x2=\"" << W - R + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\"" << c
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\">" << escape_xml(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::pair<std::string, std::string>> svg_groups(const SweepResult& r) {
  const auto cols = r.spec.columns();
  const auto x = axis_values(r);
  std::map<std::string, std::vector<Series>> groups;
  for (std::size_t c = 0; c < cols.size(); ++c) groups[group_of(cols[c])].push_back({cols[c], x, column_values(r, c)});
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [g, series] : groups) out.emplace_back(g, svg_plot(g + " vs " + axis_name(r.spec.axis), axis_name(r.spec.axis), series));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int k = 1; k <= 19; ++k) t.push_back(0.05 * k);
  return t;
}

GeneraldyneScan run_generaldyne_scan(const ScenarioParams& params, const std::vector<double>& t_grid,
                                     const RunOptions& options) {
  SweepSpec spec;
  spec.axis = Axis::T;
  spec.grid = t_grid;
  spec.fixed = epr(params);
  spec.quantities = {Quantity::ChiC, Quantity::DeltaMixture};
  GeneraldyneScan scan;
  RunOptions opts = options;
  if (opts.stem == "sweep") opts.stem = "generaldyne";
  scan.sweep = run_sweep(spec, opts);
  const auto chi = column_values(scan.sweep, 0);
  const auto delta = column_values(scan.sweep, 1);
  scan.t_argmax_chi_c = t_grid[static_cast<std::size_t>(std::max_element(chi.begin(), chi.end()) - chi.begin())];
  scan.t_argmin_delta = t_grid[static_cast<std::size_t>(std::min_element(delta.begin(), delta.end()) - delta.begin())];
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      if (std::abs(t_grid[i] + t_grid[j] - 1.0) < 1e-9) scan.max_asymmetry = std::max(scan.max_asymmetry, std::abs(chi[i] - chi[j]));
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------

void PerturbationStudySpec::validate() const {
  if (n_samples < 1) throw DomainError("perturbation study needs at least one sample");
  if (!(eta >= 0.0)) throw DomainError("perturbation scale must be >= 0");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw DomainError("keep_fraction must lie in (0, 1]");
  if (bins < 1) throw DomainError("histogram needs at least one bin");
}

int Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

double PerturbationResult::exceed_fraction() const {
  return kept.empty() ? 0.0 : static_cast<double>(exceeding) / static_cast<double>(kept.size());
}

namespace {

double mean_photon(const fock::Vec& psi) {
  double n = 0.0;
  double norm = 0.0;
  for (fock::Index k = 0; k < psi.size(); ++k) {
    n += static_cast<double>(k) * std::norm(psi[k]);
    norm += std::norm(psi[k]);
  }
  return n / norm;
}

fock::Vec tilted(const fock::Vec& psi, double log_s) {
  fock::Vec out = psi;
  for (fock::Index k = 0; k < psi.size(); ++k) out[k] *= std::exp(log_s * static_cast<double>(k));
  return out / out.norm();
}

}  // namespace

std::optional<fock::Vec> perturbed_probe(const fock::Vec& psi, double nbar, double eta, std::uint64_t seed,
                                         std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g;
  fock::Vec v = psi / psi.norm();
  // Each amplitude moves in proportion to itself, so no weight lands on unpopulated levels.
  fock::Vec dir(psi.size());
  for (fock::Index k = 0; k < psi.size(); ++k) dir[k] = std::complex<double>(g(rng), g(rng)) * std::abs(v[k]);
  if (eta > 0.0) v += eta * dir / dir.norm();
  v /= v.norm();
  // <n> increases monotonically with the tilt.
  double lo = std::log(0.25);
  double hi = std::log(4.0);
  if (mean_photon(tilted(v, lo)) > nbar || mean_photon(tilted(v, hi)) < nbar) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_photon(tilted(v, mid)) < nbar ? lo : hi) = mid;
  }
  return tilted(v, 0.5 * (lo + hi));
}

PerturbationResult run_perturbation_study(const PerturbationStudySpec& spec, const ScenarioParams& params) {
  spec.validate();
  params.validate();
  if (!std::holds_alternative<CoherentProbe>(params.probe)) throw DomainError("perturbation study needs a coherent probe");
  const auto dims = scen::initial_dims(params);
  const int d = dims.probe_dim;
  fock::Vec psi = fock::coherent_amplitudes(std::sqrt(params.nbar_probe), d);
  psi /= psi.norm();

  auto holevo_for = [&](const fock::Vec& v) {
    ScenarioParams p = params;
    p.probe = CustomProbe{fock::FockState::from_pure(fock::TruncationSpec({d}), v)};
    return info::holevo(scen::build_pair(p, dims), p.p0);
  };

  PerturbationResult out;
  out.reference = holevo_for(psi);
  constexpr int kMaxAttempts = 64;
  struct Sample {
    double value = 0.0;
    int rejected = 0;
  };
  const auto samples = parallel_map<Sample>(static_cast<std::size_t>(spec.n_samples), [&](std::size_t i) {
    Sample s;
    for (int a = 0; a < kMaxAttempts; ++a) {
      // Attempts draw from disjoint streams: index * 64 + attempt.
      const auto v = perturbed_probe(psi, params.nbar_probe, spec.eta, spec.seed, i * kMaxAttempts + static_cast<std::size_t>(a));
      if (!v) {
        ++s.rejected;
        continue;
      }
      s.value = holevo_for(*v);
      return s;
    }
    throw DomainError("perturbation study: photon number could not be restored");
  });
  for (const auto& s : samples) {
    out.kept.push_back(s.value);
    out.rejected += s.rejected;
  }
  std::sort(out.kept.begin(), out.kept.end(), std::greater<>());
  const auto keep = static_cast<std::size_t>(std::ceil(spec.keep_fraction * static_cast<double>(out.kept.size())));
  out.kept.resize(std::max<std::size_t>(1, std::min(keep, out.kept.size())));
  out.exceeding = static_cast<int>(std::count_if(out.kept.begin(), out.kept.end(), [&](double v) { return v > out.reference; }));

  double lo = out.kept.back();
  double hi = out.kept.front();
  if (hi - lo <= 0.0) {
    const double pad = std::max(1e-12, 1e-9 * std::abs(hi));
    lo -= pad;
    hi += pad;
  }
  out.histogram.counts.assign(static_cast<std::size_t>(spec.bins), 0);
  for (int b = 0; b <= spec.bins; ++b) out.histogram.edges.push_back(lo + (hi - lo) * b / spec.bins);
  for (double v : out.kept) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * spec.bins);
    b = std::clamp(b, 0, spec.bins - 1);
    ++out.histogram.counts[static_cast<std::size_t>(b)];
  }
  return out;
}

// ---------------------------------------------------------------------------

SqueezedScan run_squeezed_scan(const ScenarioParams& params, const std::vector<double>& r_grid, const RunOptions& options) {
  const ScenarioParams coherent = with_probe(params, CoherentProbe{});
  coherent.validate();
  // One set of cutoffs for the whole scan keeps the truncation error common to all points.
  const auto refined = scen::refine_truncation(
      coherent, [&](const scen::EncodedPair& pair) { return info::fuchs_lower(pair.rho0, pair.rho1, coherent.p0).value; });
  SweepSpec spec;
  spec.axis = Axis::SqueezingR;
  spec.grid = r_grid;
  spec.fixed = coherent;
  spec.quantities = {Quantity::AsLower};
  spec.dims = refined.dims;
  RunOptions opts = options;
  if (opts.stem == "sweep") opts.stem = "squeezed";
  SqueezedScan scan;
  scan.sweep = run_sweep(spec, opts);
  const auto pair = scen::build_pair(coherent, refined.dims);
  scan.reference = info::fuchs_lower(pair.rho0, pair.rho1, coherent.p0).value;
  const auto v = column_values(scan.sweep, 0);
  const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  scan.r_argmax = r_grid[best];
  scan.improvement = (v[best] - scan.reference) / scan.reference;
  return scan;
}

// ---------------------------------------------------------------------------

std::vector<double> default_energy_grid() {
  std::vector<double> e;
  for (int k = 0; k <= 10; ++k) e.push_back(0.1 * k);
  return e;
}

ConcavityResult run_concavity_check(const ScenarioParams& params, const std::vector<double>& energy_grid,
                                    const RunOptions& options) {
  if (energy_grid.size() < 3) throw DomainError("concavity check needs at least three energies");
  ConcavityResult out;
  for (double eps : {0.5, 0.1, 0.01}) {
    ScenarioParams p = with_probe(params, CoherentProbe{});
    p.epsilon = eps;
    p.nbar_probe = energy_grid.back();
    // Cutoffs refined at the largest energy serve the whole curve.
    const auto refined = scen::refine_truncation(
        p, [&](const scen::EncodedPair& pair) { return info::fuchs_lower(pair.rho0, pair.rho1, p.p0).value; });
    SweepSpec spec;
    spec.axis = Axis::NbarProbe;
    spec.grid = energy_grid;
    spec.fixed = p;
    spec.quantities = {Quantity::AsLower};
    spec.dims = refined.dims;
    RunOptions opts = options;
    opts.stem = "concavity_eps" + format_number(eps);
    const auto sweep = run_sweep(spec, opts);
    ConcavityCurve c;
    c.epsilon = eps;
    c.energy = energy_grid;
    c.lower = column_values(sweep, 0);
    for (double v : c.lower) c.scaled.push_back(v / eps);
    c.max_second_difference = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < c.lower.size(); ++i) {
      c.max_second_difference = std::max(c.max_second_difference, c.lower[i + 1] - 2.0 * c.lower[i] + c.lower[i - 1]);
    }
    out.curves.push_back(std::move(c));
  }
  out.concave = std::all_of(out.curves.begin(), out.curves.end(),
                            [](const ConcavityCurve& c) { return c.max_second_difference <= kConcavityTol; });
  for (std::size_t k = 0; k + 1 < out.curves.size(); ++k) {
    double gap = 0.0;
    for (std::size_t i = 0; i < energy_grid.size(); ++i) gap = std::max(gap, std::abs(out.curves[k].scaled[i] - out.curves[k + 1].scaled[i]));
    out.pairwise_gaps.push_back(gap);
  }
  out.gaps_shrink = true;
  for (std::size_t k = 1; k < out.pairwise_gaps.size(); ++k) out.gaps_shrink = out.gaps_shrink && out.pairwise_gaps[k] < out.pairwise_gaps[k - 1];

  if (options.out_dir) {
    std::vector<Series> raw;
    std::vector<Series> scaled;
    std::ostringstream csv;
    csv << "energy";
    for (const auto& c : out.curves) csv << ",lower_eps" << format_number(c.epsilon) << ",scaled_eps" << format_number(c.epsilon);
    csv << '\n';
    for (std::size_t i = 0; i < energy_grid.size(); ++i) {
      csv << format_number(energy_grid[i]);
      for (const auto& c : out.curves) csv << ',' << format_number(c.lower[i]) << ',' << format_number(c.scaled[i]);
      csv << '\n';
    }
    for (const auto& c : out.curves) {
      raw.push_back({"eps=" + format_number(c.epsilon), c.energy, c.lower});
      scaled.push_back({"eps=" + format_number(c.epsilon), c.energy, c.scaled});
    }
    write_file(*options.out_dir / "concavity.csv", csv.str());
    write_file(*options.out_dir / "concavity_raw.svg", svg_plot("A_s lower bound vs energy", "energy", raw));
    write_file(*options.out_dir / "concavity_scaled.svg", svg_plot("A_s lower bound / eps vs energy", "energy", scaled));
  }
  return out;
}

}  // namespace qillum::study
