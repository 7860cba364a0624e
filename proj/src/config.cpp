#include "heraldsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/util.hpp"

namespace heraldsim::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool known_key(const std::string& key) {
  const auto& keys = schema();
  return std::any_of(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == key; });
}

bool known_section(const std::string& section) {
  const auto& keys = schema();
  return std::any_of(keys.begin(), keys.end(),
                     [&](const auto& kv) { return kv.first.compare(0, section.size() + 1, section + ".") == 0; });
}

class Reader {
 public:
  explicit Reader(const Config& c) : config_(c) {}

  double number(const std::string& key) const {
    const auto& text = config_.value(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    fail(key, "expected a number, got '" + text + "'");
  }

  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive and finite (got " + format_double(v) + ")");
    return v;
  }

  double finite(const std::string& key) const {
    const double v = number(key);
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }

  double in_range(const std::string& key, double lo, double hi) const {
    const double v = number(key);
    if (!(v >= lo && v <= hi)) {
      fail(key, "must lie in [" + format_double(lo) + ", " + format_double(hi) + "] (got " + format_double(v) + ")");
    }
    return v;
  }

  std::size_t count(const std::string& key, std::size_t min) const {
    const auto& text = config_.value(key);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
      v = std::stoull(text, &used);
    } catch (const std::exception&) {
      fail(key, "expected a non-negative integer, got '" + text + "'");
    }
    if (!trim(text.substr(used)).empty()) fail(key, "expected a non-negative integer, got '" + text + "'");
    if (v < min) fail(key, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(config_.value(key));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      try {
        std::size_t used = 0;
        out.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(key, "expected a comma-separated list of numbers, bad entry '" + cell + "'");
      }
      if (!std::isfinite(out.back())) fail(key, "list entries must be finite");
    }
    if (out.empty()) fail(key, "list must not be empty");
    return out;
  }

  std::string choice(const std::string& key, std::initializer_list<std::string_view> options) const {
    const auto& text = config_.value(key);
    for (auto o : options) {
      if (text == o) return text;
    }
    std::string allowed;
    for (auto o : options) allowed += (allowed.empty() ? "" : ", ") + std::string(o);
    fail(key, "expected one of {" + allowed + "}, got '" + text + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto& e = config_.entries().at(key);
    throw ConfigError(key + ": " + what + " [" + std::string(to_string(e.provenance)) +
                      (e.origin.empty() ? "" : " " + e.origin) + "]");
  }

 private:
  const Config& config_;
};

// Fraction of |f|^2 outside [lo, hi] for the packet shifted by `shift`, using
// the exponential tails of the filter (left) and OPO (right) responses.
double tail_loss(const herald::HeraldConfig& h, double shift_lo, double shift_hi, double lo, double hi) {
  const double gf = 2.0 * std::numbers::pi * h.filter_hwhm_mhz * 1e-3;
  const double go = 2.0 * std::numbers::pi * h.opo_hwhm_mhz * 1e-3;
  const double slow = std::min(gf, go);
  const double left = std::exp(2.0 * slow * std::min(0.0, lo - shift_lo));
  const double right = std::exp(-2.0 * go * std::max(0.0, hi - shift_hi));
  return std::max(left, right);
}

// Largest |shift| reached by a jitter spec, relative to its center.
double half_support(const herald::JitterSpec& j) {
  switch (j.shape) {
    case modes::JitterShape::kDelta:
      return 0.0;
    case modes::JitterShape::kRectangular:
      return 0.5 * j.width_ns;
    case modes::JitterShape::kTrapezoidal:
      return std::max(0.5 * (j.width_ns + j.rise_ns), std::isinf(j.floor_width_ns) ? 1e300 : 0.5 * j.floor_width_ns);
    case modes::JitterShape::kGaussian:
      return 5.0 * j.sigma_ns;
    case modes::JitterShape::kCustom:
      break;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kDefault:
      return "default";
    case Provenance::kFile:
      return "file";
    case Provenance::kOverride:
      return "override";
  }
  return "default";
}

const std::vector<std::pair<std::string, std::string>>& schema() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"herald.opo_hwhm_mhz", "58.4"},
      {"herald.filter_hwhm_mhz", "8"},
      {"herald.squeeze_param", "0.25"},
      {"herald.cat_source", "subtracted"},
      {"herald.cat_alpha", "1"},
      {"herald.cat_psi", "3.141592653589793"},
      {"herald.tap_ratio", "0.047"},
      {"herald.efficiency_eta", "1"},
      {"herald.n_cut", "40"},
      {"herald.lambda1_override", "none"},
      {"grid.t0", "-200"},
      {"grid.dt", "0.5"},
      {"grid.n_samples", "801"},
      {"jitter.shape", "rectangular"},
      {"jitter.width_ns", "8.3"},
      {"jitter.rise_ns", "3.5"},
      {"jitter.extinction_db", "30"},
      {"jitter.floor_width_ns", "58"},
      {"jitter.sigma_ns", "20"},
      {"jitter.center_ns", "0"},
      {"sweep.widths_ns", "8.3,29.7,49.5,70.4"},
      {"sweep.target_w_origin", "-0.011"},
      {"sweep.fig3c_widths_ns", "0,8.3,29.7,49.5,58,70.4"},
      {"homodyne.phases_deg", "0,30,60,90,120,150"},
      {"homodyne.n_events", "60000"},
      {"homodyne.record_t_start_ns", "-140"},
      {"homodyne.record_t_end_ns", "60"},
      {"homodyne.record_step_ns", "4"},
      {"homodyne.background_factor", "1"},
      {"homodyne.background_model", "known_vacuum"},
      {"homodyne.max_coverage_loss", "1e-4"},
      {"homodyne.record_format", "binary"},
      {"tomography.n_cut", "12"},
      {"tomography.max_iter", "2000"},
      {"tomography.tol", "1e-7"},
      {"tomography.min_bin_count", "20"},
      {"tomography.bin_width", "0.05"},
      {"tomography.search_radius", "1"},
      {"tomography.bootstrap_resamples", "100"},
      {"tomography.input", ""},
  };
  return keys;
}

Config::Config() {
  for (const auto& [key, value] : schema()) entries_[key] = Entry{value, Provenance::kDefault, ""};
}

const std::string& Config::value(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second.value;
}

void Config::set(const std::string& key, std::string value, Provenance provenance, std::string origin) {
  if (!known_key(key)) {
    throw ConfigError((origin.empty() ? "" : origin + ": ") + "unknown key '" + key + "'");
  }
  entries_[key] = Entry{std::move(value), provenance, std::move(origin)};
}

void Config::load(std::istream& in, const std::string& origin) {
  std::string line;
  std::string section;
  std::map<std::string, std::size_t> seen;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + ": malformed section header '" + text + "'");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!known_section(section)) throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + text + "'");
    const std::string name = trim(std::string_view(text).substr(0, eq));
    if (name.empty()) throw ConfigError(where + ": missing key name");
    const std::string key = section.empty() ? name : section + "." + name;
    if (!known_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (const auto it = seen.find(key); it != seen.end()) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " + std::to_string(it->second) +
                        ")");
    }
    seen[key] = line_no;
    set(key, trim(std::string_view(text).substr(eq + 1)), Provenance::kFile, where);
  }
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  load(in, path.string());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), Provenance::kOverride, "--set");
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, e] : entries_) {
    j[key] = {{"value", e.value}, {"provenance", std::string(to_string(e.provenance))}};
  }
  return j;
}

Config Config::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("manifest config must be an object");
  Config c;
  for (const auto& [key, e] : j.items()) {
    if (!e.is_object() || !e.contains("value") || !e["value"].is_string()) {
      throw ConfigError("manifest entry '" + key + "' lacks a string value");
    }
    Provenance p = Provenance::kDefault;
    const auto prov = e.value("provenance", std::string("default"));
    if (prov == "file") p = Provenance::kFile;
    else if (prov == "override") p = Provenance::kOverride;
    c.set(key, e["value"].get<std::string>(), p, "manifest");
  }
  return c;
}

Settings resolve(const Config& config) {
  const Reader r(config);
  Settings s;
  auto& h = s.herald;
  h.opo_hwhm_mhz = r.positive("herald.opo_hwhm_mhz");
  h.filter_hwhm_mhz = r.positive("herald.filter_hwhm_mhz");
  h.squeeze_param = r.in_range("herald.squeeze_param", 0.0, 3.0);
  h.cat_source = r.choice("herald.cat_source", {"subtracted", "cat"}) == "cat" ? herald::CatSource::kCat
                                                                               : herald::CatSource::kSubtracted;
  h.cat_alpha = r.finite("herald.cat_alpha");
  h.cat_psi = r.finite("herald.cat_psi");
  h.tap_ratio = r.number("herald.tap_ratio");
  if (!(h.tap_ratio > 0.0 && h.tap_ratio < 1.0)) r.fail("herald.tap_ratio", "must lie in (0, 1)");
  h.efficiency_eta = r.in_range("herald.efficiency_eta", 0.0, 1.0);
  h.n_cut = r.count("herald.n_cut", 2);
  if (config.value("herald.lambda1_override") != "none") {
    h.lambda1_override = r.in_range("herald.lambda1_override", 0.0, 1.0);
  }

  h.grid.t0 = r.finite("grid.t0");
  h.grid.dt = r.positive("grid.dt");
  h.grid.n_samples = r.count("grid.n_samples", 16);

  auto& j = h.jitter;
  const auto shape = r.choice("jitter.shape", {"delta", "rectangular", "trapezoidal", "gaussian"});
  j.shape = modes::jitter_shape_from_string(shape);
  j.width_ns = r.positive("jitter.width_ns");
  j.rise_ns = r.number("jitter.rise_ns");
  if (!(j.rise_ns >= 0.0 && j.rise_ns < j.width_ns)) r.fail("jitter.rise_ns", "must lie in [0, width_ns)");
  j.extinction_db = r.number("jitter.extinction_db");
  if (!(j.extinction_db > 0.0)) r.fail("jitter.extinction_db", "must be positive (inf allowed)");
  j.floor_width_ns = r.number("jitter.floor_width_ns");
  if (!(j.floor_width_ns >= 0.0)) r.fail("jitter.floor_width_ns", "must be non-negative (inf allowed)");
  j.sigma_ns = r.positive("jitter.sigma_ns");
  j.center_ns = r.finite("jitter.center_ns");

  s.sweep_widths_ns = r.list("sweep.widths_ns");
  for (double w : s.sweep_widths_ns) {
    if (!(w > 0.0)) r.fail("sweep.widths_ns", "widths must be positive");
  }
  s.target_w_origin = r.finite("sweep.target_w_origin");
  s.fig3c_widths_ns = r.list("sweep.fig3c_widths_ns");
  for (double w : s.fig3c_widths_ns) {
    if (!(w >= 0.0)) r.fail("sweep.fig3c_widths_ns", "widths must be non-negative (0 = no jitter)");
  }

  for (double deg : r.list("homodyne.phases_deg")) s.phases.push_back(deg * std::numbers::pi / 180.0);
  s.n_events = r.count("homodyne.n_events", 1);
  s.records.t_start_ns = r.finite("homodyne.record_t_start_ns");
  s.records.t_end_ns = r.finite("homodyne.record_t_end_ns");
  if (!(s.records.t_end_ns > s.records.t_start_ns)) {
    r.fail("homodyne.record_t_end_ns", "must exceed homodyne.record_t_start_ns");
  }
  s.records.step_ns = r.positive("homodyne.record_step_ns");
  s.records.background_factor = r.positive("homodyne.background_factor");
  s.records.max_coverage_loss = r.in_range("homodyne.max_coverage_loss", 0.0, 1.0);
  s.background = r.choice("homodyne.background_model", {"known_vacuum", "estimated"}) == "estimated"
                     ? homodyne::BackgroundModel::kEstimated
                     : homodyne::BackgroundModel::kKnownVacuum;
  const auto fmt = r.choice("homodyne.record_format", {"binary", "csv", "both"});
  s.record_format = fmt == "csv" ? RecordFormat::kCsv : fmt == "both" ? RecordFormat::kBoth : RecordFormat::kBinary;

  s.mle.n_cut = r.count("tomography.n_cut", 2);
  s.mle.max_iter = r.count("tomography.max_iter", 1);
  s.mle.tol = r.positive("tomography.tol");
  s.mle.min_bin_count = r.count("tomography.min_bin_count", 1);
  s.mle.base_bin_width = r.positive("tomography.bin_width");
  s.search_radius = r.positive("tomography.search_radius");
  s.bootstrap_resamples = r.count("tomography.bootstrap_resamples", 0);
  if (s.bootstrap_resamples > 0 && s.bootstrap_resamples < tomography::kMinBootstrapResamples) {
    r.fail("tomography.bootstrap_resamples",
           "must be 0 (off) or at least " + std::to_string(tomography::kMinBootstrapResamples));
  }
  s.tomography_input = config.value("tomography.input");
  return s;
}

std::vector<std::string> precheck(const Settings& s) {
  std::vector<std::string> warnings;
  const auto& h = s.herald;
  h.validate();

  // truncation
  const auto cat = herald::cat_component(h);
  const auto sqz = herald::squeezed_component(h);
  const double tail = std::max({cat.tail_mass(), cat.truncation_deficit(), sqz.tail_mass(), sqz.truncation_deficit()});
  if (tail > 1e-6) {
    throw PreconditionError("herald.n_cut = " + std::to_string(h.n_cut) + " truncates the state (tail mass " +
                            format_double(tail) + " > 1e-6)");
  }
  if (tail > 1e-10) {
    warnings.push_back("herald.n_cut = " + std::to_string(h.n_cut) + " leaves tail mass " + format_double(tail));
  }
  if (s.mle.n_cut > h.n_cut) {
    warnings.push_back("tomography.n_cut exceeds herald.n_cut");
  }

  // grid coverage
  const double gf = 2.0 * std::numbers::pi * h.filter_hwhm_mhz * 1e-3;
  const double go = 2.0 * std::numbers::pi * h.opo_hwhm_mhz * 1e-3;
  const double slowest = 1.0 / std::min(gf, go);
  if (!h.grid.covers(slowest)) {
    throw GridError("grid span " + format_double(h.grid.span()) + " ns does not cover 6 decay constants (" +
                    format_double(6.0 * slowest) + " ns)");
  }
  if (h.grid.t0 > 0.0 || h.grid.t_end() < 0.0) {
    throw GridError("grid must contain t = 0");
  }

  auto check_jitter = [&](const herald::JitterSpec& j, const std::string& label) {
    const double half = half_support(j);
    if (2.0 * half >= h.grid.span()) {
      throw GridError(label + ": jitter support " + format_double(2.0 * half) + " ns exceeds the grid span " +
                      format_double(h.grid.span()) + " ns");
    }
    const double lo = j.center_ns - half;
    const double hi = j.center_ns + half;
    const double kernel_loss = tail_loss(h, lo, hi, h.grid.t0, h.grid.t_end());
    if (kernel_loss > 1e-6) {
      throw GridError(label + ": shifted wave packets leave the grid (estimated loss " + format_double(kernel_loss) +
                      " > 1e-6)");
    }
    const double record_loss = tail_loss(h, lo, hi, s.records.t_start_ns, s.records.t_end_ns);
    if (record_loss > s.records.max_coverage_loss) {
      warnings.push_back(label + ": shifted wave packets leave the homodyne record window (estimated loss " +
                         format_double(record_loss) + "); synthesis will fail");
    }
  };
  check_jitter(h.jitter, "jitter");
  auto sweep = h.jitter;
  if (sweep.shape == modes::JitterShape::kDelta || sweep.shape == modes::JitterShape::kGaussian) {
    sweep.shape = modes::JitterShape::kRectangular;
  }
  for (double w : s.sweep_widths_ns) {
    sweep.width_ns = w;
    check_jitter(sweep, "sweep width " + format_double(w) + " ns");
  }
  for (double w : s.fig3c_widths_ns) {
    if (w == 0.0) continue;
    sweep.width_ns = w;
    check_jitter(sweep, "fig3c width " + format_double(w) + " ns");
  }
  if (s.records.t_start_ns < h.grid.t0 || s.records.t_end_ns > h.grid.t_end()) {
    throw GridError("homodyne record window lies outside the simulation grid");
  }
  if (std::set<double>(s.phases.begin(), s.phases.end()).size() < 2) {
    warnings.push_back("fewer than two distinct phases: tomography will be refused");
  }
  return warnings;
}

void write_normalized(std::ostream& out, const Config& config) {
  std::string section;
  for (const auto& [key, unused] : schema()) {
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    const auto& e = config.entries().at(key);
    out << key.substr(dot + 1) << " = " << e.value << "  # " << to_string(e.provenance);
    if (!e.origin.empty()) out << " (" << e.origin << ')';
    out << '\n';
  }
}

}  // namespace heraldsim::config
