#include "heraldsim/record_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "heraldsim/errors.hpp"
#include "heraldsim/util.hpp"

namespace heraldsim::io {

namespace {

constexpr std::array<char, 4> kRecordMagic{'H', 'S', 'R', 'C'};
constexpr std::array<char, 4> kSampleMagic{'H', 'S', 'Q', 'S'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw ConfigError("unexpected end of binary input");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void check_header(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), got.size()) || got != magic) {
    throw ConfigError("bad magic: expected " + std::string(magic.data(), magic.size()));
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kBinaryVersion) {
    throw ConfigError("unsupported binary version " + std::to_string(version));
  }
}

// Guard against absurd counts from corrupt headers before allocating.
void check_count(std::uint64_t n, const char* what) {
  if (n > (std::uint64_t{1} << 32)) throw ConfigError(std::string("implausible ") + what + " count");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

std::uint64_t parse_index(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": not an index: '" + s + "'");
  }
}

std::vector<std::string> read_table(std::istream& in, const std::string& expected_header,
                                    std::vector<std::vector<std::string>>& rows) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw ConfigError("unexpected CSV header '" + line + "', expected '" + expected_header + "'");
  }
  const auto header = split_csv(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields");
    }
    cells.push_back(std::to_string(line_no));
    rows.push_back(std::move(cells));
  }
  return header;
}

constexpr const char* kRecordHeader = "event_id,theta_rad,t_ns,value_per_sqrt_ns";
constexpr const char* kSampleHeader = "phase_index,theta_rad,x_dimensionless";

}  // namespace

void write_records_csv(std::ostream& out, const homodyne::RecordSet& records) {
  out << kRecordHeader << '\n';
  for (const auto& r : records.records) {
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
      out << r.event_id << ',' << format_double(r.theta) << ',' << format_double(records.grid.time(k)) << ','
          << format_double(r.samples[k]) << '\n';
    }
  }
}

homodyne::RecordSet read_records_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  read_table(in, kRecordHeader, rows);
  homodyne::RecordSet set;
  std::vector<double> times;
  for (const auto& row : rows) {
    const auto line = std::stoull(row[4]);
    const auto id = parse_index(row[0], line);
    const double theta = parse_number(row[1], line);
    const double t = parse_number(row[2], line);
    const double v = parse_number(row[3], line);
    if (set.records.empty() || set.records.back().event_id != id) {
      set.records.push_back({id, theta, {}, 0.0});
    }
    auto& rec = set.records.back();
    if (set.records.size() == 1) {
      times.push_back(t);
    } else if (rec.samples.size() >= times.size() ||
               std::abs(t - times[rec.samples.size()]) > 1e-9 * std::max(1.0, std::abs(t))) {
      throw ConfigError("line " + std::to_string(line) + ": sample times differ between records");
    }
    rec.samples.push_back(v);
  }
  if (set.records.empty()) throw ConfigError("records CSV has no rows");
  for (const auto& r : set.records) {
    if (r.samples.size() != times.size()) throw ConfigError("records have unequal lengths");
  }
  set.grid.t0 = times.front();
  set.grid.n_samples = times.size();
  set.grid.dt = times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1) : 1.0;
  return set;
}

void write_samples_csv(std::ostream& out, const tomography::QuadratureSampleSet& samples) {
  out << kSampleHeader << '\n';
  for (std::size_t p = 0; p < samples.phases.size(); ++p) {
    const auto& phase = samples.phases[p];
    for (double x : phase.x) out << p << ',' << format_double(phase.theta) << ',' << format_double(x) << '\n';
  }
}

tomography::QuadratureSampleSet read_samples_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  read_table(in, kSampleHeader, rows);
  tomography::QuadratureSampleSet set;
  set.source = "csv";
  for (const auto& row : rows) {
    const auto line = std::stoull(row[3]);
    const auto index = parse_index(row[0], line);
    const double theta = parse_number(row[1], line);
    const double x = parse_number(row[2], line);
    if (index > set.phases.size()) {
      throw ConfigError("line " + std::to_string(line) + ": phase index out of order");
    }
    if (index == set.phases.size()) set.phases.push_back({theta, {}});
    if (set.phases[index].theta != theta) {
      throw ConfigError("line " + std::to_string(line) + ": phase index with inconsistent theta");
    }
    set.phases[index].x.push_back(x);
  }
  return set;
}

void write_records_binary(std::ostream& out, const homodyne::RecordSet& records) {
  out.write(kRecordMagic.data(), kRecordMagic.size());
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint64_t>(out, records.records.size());
  put_le<std::uint64_t>(out, records.grid.n_samples);
  put_f64(out, records.grid.t0);
  put_f64(out, records.grid.dt);
  for (const auto& r : records.records) {
    if (r.samples.size() != records.grid.n_samples) {
      throw PreconditionError("record length does not match its grid");
    }
    put_le<std::uint64_t>(out, r.event_id);
    put_f64(out, r.theta);
    put_f64(out, r.shift_truth);
    for (double v : r.samples) put_f64(out, v);
  }
}

homodyne::RecordSet read_records_binary(std::istream& in) {
  check_header(in, kRecordMagic);
  const auto n_records = get_le<std::uint64_t>(in);
  const auto n_samples = get_le<std::uint64_t>(in);
  check_count(n_records, "record");
  check_count(n_samples, "sample");
  homodyne::RecordSet set;
  set.grid.n_samples = n_samples;
  set.grid.t0 = get_f64(in);
  set.grid.dt = get_f64(in);
  set.records.reserve(n_records);
  for (std::uint64_t i = 0; i < n_records; ++i) {
    homodyne::HomodyneRecord r;
    r.event_id = get_le<std::uint64_t>(in);
    r.theta = get_f64(in);
    r.shift_truth = get_f64(in);
    r.samples.resize(n_samples);
    for (double& v : r.samples) v = get_f64(in);
    set.records.push_back(std::move(r));
  }
  return set;
}

void write_samples_binary(std::ostream& out, const tomography::QuadratureSampleSet& samples) {
  out.write(kSampleMagic.data(), kSampleMagic.size());
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint64_t>(out, samples.phases.size());
  for (const auto& phase : samples.phases) {
    put_f64(out, phase.theta);
    put_le<std::uint64_t>(out, phase.x.size());
    for (double x : phase.x) put_f64(out, x);
  }
}

tomography::QuadratureSampleSet read_samples_binary(std::istream& in) {
  check_header(in, kSampleMagic);
  const auto n_phases = get_le<std::uint64_t>(in);
  check_count(n_phases, "phase");
  tomography::QuadratureSampleSet set;
  set.source = "binary";
  for (std::uint64_t p = 0; p < n_phases; ++p) {
    tomography::PhaseSamples phase;
    phase.theta = get_f64(in);
    const auto count = get_le<std::uint64_t>(in);
    check_count(count, "sample");
    phase.x.resize(count);
    for (double& x : phase.x) x = get_f64(in);
    set.phases.push_back(std::move(phase));
  }
  return set;
}

}  // namespace heraldsim::io
