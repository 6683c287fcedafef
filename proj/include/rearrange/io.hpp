#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "rearrange/fields.hpp"

namespace rearrange {

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

/// Hash of a flat key=value map, independent of insertion order.
std::string config_hash(const std::map<std::string, std::string>& entries);

/// "# config_hash=<hash> seed=<seed> replicate=<r>" header line.
void write_provenance(std::ostream& os, const std::string& hash, std::uint64_t seed,
                      std::uint64_t replicate);

/// Quote a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& s);

/// Columns z_1..z_d, value.
void write_sample_csv(std::ostream& os, const FieldSample& sample);

/// Write `content` to `path` (binary, LF line endings), creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace rearrange
