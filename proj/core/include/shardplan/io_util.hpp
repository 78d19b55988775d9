#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shardplan {

/// Shortest round-trip decimal form of a double ("24", "0.3", "1e-09").
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::string read_file(const std::filesystem::path& path);  // throws on failure
void write_file(const std::filesystem::path& path, std::string_view content);

/// fnv1a-64 of the file bytes as lowercase hex, used for provenance stamps.
std::string file_checksum(const std::filesystem::path& path);

namespace csv {

/// RFC-4180 style quoting: fields with comma, quote, or newline get quoted.
std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

/// Splits one CSV record. Returns std::nullopt on malformed quoting.
std::optional<std::vector<std::string>> split_row(std::string_view line);

}  // namespace csv

}  // namespace shardplan
