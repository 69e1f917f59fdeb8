#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stanloop::io {

/// Full-precision decimal rendering (17 significant digits) used for
/// all byte-stable file output.
std::string fmt17(double v);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // rectangular

    std::size_t col_index(std::string_view name) const;  // throws parse_error if absent
    bool has_column(std::string_view name) const;
    std::vector<double> column(std::string_view name) const;
};

/// Reads a rectangular numeric CSV. Lines starting with '#' are
/// skipped when skip_comments is set (sampler output convention).
/// Ragged or non-numeric rows raise parse_error with the line number.
Table read_numeric_csv(const std::filesystem::path& path, bool skip_comments = false);
Table read_numeric_csv_text(const std::string& content, bool skip_comments = false);

void write_csv(const Table& table, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Write-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

/// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace stanloop::io
