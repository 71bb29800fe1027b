#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace poisonlab {

/// Shortest-round-trip decimal text for a double. Stable across runs, so CSV
/// and manifest outputs are byte-reproducible.
std::string format_double(double v);

std::string format_u64(std::uint64_t v);

/// Minimal comma-separated table, no quoting (fields never contain commas).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t bytes);
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);

std::vector<std::string> split(const std::string& s, char sep);

} // namespace poisonlab
