#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dme {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n node vectors of dimension d; row i holds node i. All entries finite.
class Dataset {
 public:
  explicit Dataset(Matrix values);

  Eigen::Index n() const noexcept { return values_.rows(); }
  Eigen::Index d() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  auto row(Eigen::Index i) const { return values_.row(i); }

  /// The quantity being estimated: (1/n) * sum_i X_i, summed in node order.
  Vector mean() const;
  /// Per-node arithmetic means, the default node centers.
  Vector row_means() const { return values_.rowwise().mean(); }

 private:
  Matrix values_;
};

enum class Distribution { Gaussian, Laplace, ChiSquared2 };

/// Accepts "gaussian", "laplace", "chi_squared" (also "chi2"). Throws std::invalid_argument otherwise.
Distribution parse_distribution(std::string_view name);
std::string_view to_string(Distribution dist) noexcept;

/// i.i.d. N(0,1), Laplace(0,1) or chi-squared(2) entries, row-major draw order.
Dataset gen_synthetic(Distribution dist, Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

// CSV: header row x0..x{d-1}, then one row per node. The reader skips a leading non-numeric row.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

}  // namespace dme
