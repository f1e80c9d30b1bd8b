#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace heavytail {

/// K x n block of observations or simulations with column labels. Columns are
/// stored contiguously. Entries are finite; K >= 1.
class SampleMatrix {
 public:
  SampleMatrix(Eigen::MatrixXd data, std::vector<std::string> labels);

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }
  const Eigen::MatrixXd& data() const { return data_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::span<const double> column(std::size_t j) const {
    return {data_.col(static_cast<Eigen::Index>(j)).data(), rows()};
  }

  /// Header row of labels, then one row per observation, %.17g.
  void write_csv(std::ostream& out) const;

  /// Throws DataError naming the offending row/column for malformed input.
  static SampleMatrix read_csv(std::istream& in);

 private:
  Eigen::MatrixXd data_;
  std::vector<std::string> labels_;
};

/// Shortest round-trippable decimal form limited to 17 significant digits.
std::string format_real(double value);

std::vector<std::string> default_labels(std::size_t n);

}  // namespace heavytail
