#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace corrvae::io {

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double value);

/// Parses a full cell as a double (dot decimal). Throws DataError naming
/// the cell position on failure.
double parse_double(std::string_view cell, std::size_t row, std::size_t col);

/// Splits one CSV record on commas, trimming blanks and a trailing '\r'.
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t hash_bytes(std::string_view bytes);
std::string hash_hex(std::uint64_t hash);
std::string file_hash_hex(const std::filesystem::path& path);

struct LabeledMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

/// Square matrix CSV: header row of labels, then one row per label.
std::string matrix_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m);
LabeledMatrix read_matrix_csv(const std::filesystem::path& path);

/// Generic numeric table: header of column names, rows of numbers.
std::string table_to_csv(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& columns);

}  // namespace corrvae::io
