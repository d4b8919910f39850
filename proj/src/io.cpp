#include "corrvae/io.hpp"

#include "corrvae/error.hpp"
#include "corrvae/random.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace corrvae::io {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view cell, std::size_t row, std::size_t col) {
  const auto where = "(" + std::to_string(row) + ", " + std::to_string(col) + ")";
  if (cell.empty()) throw DataError("io", "missing value at " + where);
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw DataError("io", "non-numeric value '" + std::string(cell) + "' at " + where);
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto end = line.find(',', start);
    auto cell = line.substr(start, end == std::string_view::npos ? line.npos : end - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("io", "cannot open file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("io", "cannot write file " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("io", "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t hash_bytes(std::string_view bytes) { return fnv1a64(bytes); }

std::string hash_hex(std::uint64_t hash) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, hash >>= 4) out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
  return out;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  return hash_hex(hash_bytes(read_file(path)));
}

std::string matrix_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  std::string out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (j) out += ',';
    out += labels[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError("io", "empty matrix file " + path.string());
  LabeledMatrix result;
  result.labels = split_csv_line(line);
  const auto m = result.labels.size();
  result.values.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (row >= m || cells.size() != m)
      throw DataError("io", "matrix file " + path.string() + " is not square at row " +
                                std::to_string(row + 1));
    for (std::size_t j = 0; j < m; ++j)
      result.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
          parse_double(cells[j], row + 1, j);
    ++row;
  }
  if (row != m) throw DataError("io", "matrix file " + path.string() + " has too few rows");
  return result;
}

std::string table_to_csv(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& columns) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out += ',';
      out += format_double(columns[j][i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace corrvae::io
