#pragma once

#include <cstdint>
#include <string>

namespace ibgeo {

/// FNV-1a hash of a canonical config string; embedded in every output
/// header so files are traceable to the exact run configuration.
std::uint64_t config_hash(const std::string& canonical_config);

/// "# config=<hex hash> <canonical config>\n" header line for CSV files.
std::string config_header(const std::string& canonical_config);

/// Write a file atomically (temp file in the same directory + rename), so
/// concurrent sweep jobs never expose partial output.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace ibgeo
