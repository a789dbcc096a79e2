#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace floatnorm {

/// Shortest decimal that round-trips the 64-bit value.
std::string format_double(double value);
/// Strict full-string parse; false on empty input or trailing characters.
bool parse_double(std::string_view text, double& out);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary and renames, so readers never see partial files.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// git-style blob hash: sha1("blob <size>\0" + contents), hex encoded.
std::string content_hash(std::string_view contents);
std::string file_content_hash(const std::filesystem::path& path);

}  // namespace floatnorm
