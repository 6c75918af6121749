#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace uncq {

// Shortest round-trip decimal form of a double (to_chars), so serialized
// numbers are identical byte-for-byte across runs.
std::string format_double(double value);

// Fixed-point form, e.g. for confidences shown in reports.
std::string format_fixed(double value, int digits);

// RFC-4180: quote a CSV field when it contains comma, quote or newline.
std::string csv_field(std::string_view value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace uncq
