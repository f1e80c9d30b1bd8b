#include "heavytail/sample_matrix.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "heavytail/errors.hpp"

namespace heavytail {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string{}
                                               : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_real(double value) {
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t j = 0; j < n; ++j) labels.push_back("Y" + std::to_string(j + 1));
  return labels;
}

SampleMatrix::SampleMatrix(Eigen::MatrixXd data, std::vector<std::string> labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw DataError("sample matrix needs at least one row and one column");
  }
  if (labels_.size() != cols()) {
    throw DataError("sample matrix has " + std::to_string(cols()) + " columns but " +
                    std::to_string(labels_.size()) + " labels");
  }
  for (Eigen::Index j = 0; j < data_.cols(); ++j) {
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      if (!std::isfinite(data_(i, j))) {
        throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column '" +
                        labels_[static_cast<std::size_t>(j)] + "'");
      }
    }
  }
}

void SampleMatrix::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (j) out << ',';
    out << labels_[j];
  }
  out << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      if (j) line += ',';
      line += format_real(data_(i, j));
    }
    line += '\n';
    out << line;
  }
}

SampleMatrix SampleMatrix::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty (missing header row)");
  auto labels = split_csv_line(line);
  if (labels.empty() || (labels.size() == 1 && labels[0].empty())) {
    throw DataError("CSV header row is empty");
  }
  const std::size_t n = labels.size();
  std::vector<double> values;
  std::size_t row = 0;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n) {
      throw DataError("CSV line " + std::to_string(line_number) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::string& cell = cells[j];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (begin != end && *begin == '+') ++begin;
      const auto parsed = std::from_chars(begin, end, value);
      if (cell.empty() || parsed.ec != std::errc{} || parsed.ptr != end) {
        throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row + 1) +
                        ", column '" + labels[j] + "'");
      }
      if (!std::isfinite(value)) {
        throw DataError("non-finite cell '" + cell + "' at row " + std::to_string(row + 1) +
                        ", column '" + labels[j] + "'");
      }
      values.push_back(value);
    }
    ++row;
  }
  if (row == 0) throw DataError("CSV input has a header but no data rows");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * n + j];
    }
  }
  return SampleMatrix(std::move(data), std::move(labels));
}

}  // namespace heavytail
