#pragma once

#include <iosfwd>

#include "heraldsim/homodyne.hpp"
#include "heraldsim/tomography.hpp"

namespace heraldsim::io {

// CSV, one row per sample:
//   records: event_id,theta_rad,t_ns,value_per_sqrt_ns
//   samples: phase_index,theta_rad,x_dimensionless
//
// Binary, all integers and doubles little-endian:
//   records: "HSRC" u32 version=1, u64 n_records, u64 n_samples, f64 t0_ns, f64 dt_ns,
//            then per record u64 event_id, f64 theta, f64 shift_ns, f64 samples[n_samples]
//   samples: "HSQS" u32 version=1, u64 n_phases,
//            then per phase f64 theta, u64 count, f64 x[count]
//
// Readers throw ConfigError on malformed input.

inline constexpr std::uint32_t kBinaryVersion = 1;

void write_records_csv(std::ostream& out, const homodyne::RecordSet& records);
homodyne::RecordSet read_records_csv(std::istream& in);

void write_samples_csv(std::ostream& out, const tomography::QuadratureSampleSet& samples);
tomography::QuadratureSampleSet read_samples_csv(std::istream& in);

void write_records_binary(std::ostream& out, const homodyne::RecordSet& records);
homodyne::RecordSet read_records_binary(std::istream& in);

void write_samples_binary(std::ostream& out, const tomography::QuadratureSampleSet& samples);
tomography::QuadratureSampleSet read_samples_binary(std::istream& in);

}  // namespace heraldsim::io
