#include "dme/dataset.hpp"

#include "dme/rng.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace dme {

Dataset::Dataset(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("Dataset: need n >= 1 and d >= 1");
  }
  if (!values_.allFinite()) throw std::invalid_argument("Dataset: entries must be finite");
}

Vector Dataset::mean() const {
  Vector sum = Vector::Zero(d());
  for (Eigen::Index i = 0; i < n(); ++i) sum += values_.row(i).transpose();
  return sum / static_cast<double>(n());
}

Distribution parse_distribution(std::string_view name) {
  if (name == "gaussian" || name == "normal") return Distribution::Gaussian;
  if (name == "laplace") return Distribution::Laplace;
  if (name == "chi_squared" || name == "chi2" || name == "chisq") return Distribution::ChiSquared2;
  throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

std::string_view to_string(Distribution dist) noexcept {
  switch (dist) {
    case Distribution::Gaussian: return "gaussian";
    case Distribution::Laplace: return "laplace";
    case Distribution::ChiSquared2: return "chi_squared";
  }
  return "?";
}

namespace {

double draw(Distribution dist, Rng& rng) {
  switch (dist) {
    case Distribution::Gaussian:
      return rng.normal();
    case Distribution::Laplace: {
      // Inverse CDF on u in (-1/2, 1/2].
      const double u = rng.uniform_open0() - 0.5;
      const double mag = -std::log(1.0 - 2.0 * std::abs(u));
      return u < 0 ? -mag : mag;
    }
    case Distribution::ChiSquared2:
      // Exponential with mean 2.
      return -2.0 * std::log(rng.uniform_open0());
  }
  return 0.0;
}

}  // namespace

Dataset gen_synthetic(Distribution dist, Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_synthetic: need n >= 1 and d >= 1");
  Rng rng(seed);
  Matrix values(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = draw(dist, rng);
      // -0 would survive CSV as "-0"; normalise so files are canonical.
      if (v == 0.0) v = 0.0;
      values(i, j) = v;
    }
  }
  return Dataset(std::move(values));
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const Matrix& x = data.values();
  for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? ",x" : "x") << j;
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out, data);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (std::exchange(first_line, false) && std::isalpha(static_cast<unsigned char>(line.front())) &&
        line.rfind("inf", 0) != 0 && line.rfind("nan", 0) != 0) {
      continue;  // header row
    }
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      const char* first = line.data() + pos;
      const char* last = line.data() + comma;
      while (first < last && *first == ' ') ++first;
      double v = 0.0;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("read_csv: bad number in row " + std::to_string(rows.size() + 1));
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("read_csv: ragged row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("read_csv: empty dataset");
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return Dataset(std::move(values));
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

}  // namespace dme
