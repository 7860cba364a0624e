#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "heraldsim/herald.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/tomography.hpp"

namespace heraldsim::config {

// Flat key = value text with [section] headers; keys are addressed as
// "section.key". Lines starting with '#' or ';' are comments.

enum class Provenance { kDefault, kFile, kOverride };

std::string_view to_string(Provenance p);

struct Entry {
  std::string value;
  Provenance provenance = Provenance::kDefault;
  std::string origin;  // "path:line", "--set" or "manifest"
};

class Config {
 public:
  /// Every known key at its default.
  Config();

  /// Throws ConfigError naming origin, line and key on unknown keys,
  /// duplicates or malformed lines.
  void load(std::istream& in, const std::string& origin);
  void load_file(const std::filesystem::path& path);
  /// "section.key=value"
  void apply_override(std::string_view assignment);
  void set(const std::string& key, std::string value, Provenance provenance, std::string origin);

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& value(const std::string& key) const;

  /// {"section.key": {"value": ..., "provenance": ...}}
  nlohmann::json to_json() const;
  /// Inverse of to_json; provenance is kept, unknown keys are rejected.
  static Config from_json(const nlohmann::json& j);

 private:
  std::map<std::string, Entry> entries_;
};

/// Keys in declaration order with their defaults.
const std::vector<std::pair<std::string, std::string>>& schema();

enum class RecordFormat { kBinary, kCsv, kBoth };

struct Settings {
  herald::HeraldConfig herald;
  std::vector<double> sweep_widths_ns;
  double target_w_origin = -0.011;
  std::vector<double> fig3c_widths_ns;

  std::vector<double> phases;  // rad
  std::size_t n_events = 60000;
  homodyne::RecordOptions records;
  homodyne::BackgroundModel background = homodyne::BackgroundModel::kKnownVacuum;
  RecordFormat record_format = RecordFormat::kBinary;

  tomography::MleOptions mle;
  double search_radius = 1.0;
  std::size_t bootstrap_resamples = 100;
  std::string tomography_input;  // samples file (.csv or .bin); empty = synthesize
};

/// Parses and range-checks every key. Throws ConfigError naming the key.
Settings resolve(const Config& config);

/// Truncation and grid-coverage checks that need no simulation. Returns
/// advisory warnings; throws GridError / PreconditionError when a check
/// fails badly enough that the run could not succeed.
std::vector<std::string> precheck(const Settings& settings);

/// Human-readable dump: one "key = value  # provenance" line per key.
void write_normalized(std::ostream& out, const Config& config);

}  // namespace heraldsim::config
