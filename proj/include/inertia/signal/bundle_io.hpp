#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "inertia/signal/dataset.hpp"

namespace inertia::signal {

/// Bundle layout: a directory holding `manifest` (line-oriented text) and
/// `samples.bin`:
///   "INRTDS01" | u32 version | u64 count
///   per record: f64 label | u32 n_buses | u32 n_features | u32 n_steps |
///               f32 values[n_buses*n_features*n_steps] | u32 crc32(record)
/// All integers and floats little-endian.
inline constexpr char kSamplesMagic[8] = {'I', 'N', 'R', 'T', 'D', 'S', '0', '1'};
inline constexpr std::uint32_t kSamplesVersion = 1;

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

void write_manifest(std::ostream& os, const Dataset& ds);
/// Parses a manifest into `ds` (info, normalization, split, sample metadata
/// sizes). Throws DataError on malformed input.
void read_manifest(std::istream& is, Dataset& ds);

void write_samples(std::ostream& os, const Dataset& ds);
void read_samples(std::istream& is, Dataset& ds);

/// Long-format CSV of one sample: time,bus,feature,value.
void export_sample_csv(std::ostream& os, const Dataset& ds, std::size_t index);

}  // namespace inertia::signal
