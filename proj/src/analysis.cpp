#include "dme/analysis.hpp"

#include "dme/dataset.hpp"
#include "dme/parallel.hpp"

#include <vector>

namespace dme {

MseBounds mse_bounds(const SpreadStats& stats, double budget, Eigen::Index n) {
  const auto support = static_cast<double>(stats.support_size);
  if (!(budget > 0.0) || budget > support) {
    throw std::out_of_range("mse_bounds: budget must satisfy 0 < B <= |S|");
  }
  const double nn = static_cast<double>(n);
  MseBounds b;
  b.lower = (1.0 / budget - 1.0) * stats.R / nn;
  b.upper = (support / budget - 1.0) * stats.R / nn;
  if (budget <= stats.W / stats.max_a) {
    b.exact = stats.W * stats.W / (nn * nn * budget) - stats.R / nn;
  }
  return b;
}

std::string MseReport::csv_row() const {
  return format_double(closed_form) + "," + format_double(empirical) + "," + std::to_string(trials) + "," +
         format_double(std_error);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double closed_form_mse(const Dataset& data, const Pipeline& pipeline) {
  const Matrix z = encoder_input(pipeline, data.values());
  validate(pipeline.encoder, z);
  return std::visit(
      overloaded{
          [](const IdentityEncoder&) { return 0.0; },
          [&](const VariableEncoder& e) { return mse_closed_variable(z, e.params.probs, e.params.centers); },
          [&](const SeededVariableEncoder& e) {
            return mse_closed_variable(z, Matrix::Constant(z.rows(), z.cols(), e.p), e.centers);
          },
          [&](const FixedEncoder& e) { return mse_closed_fixed(z, e.k, e.centers); },
          [&](const BinaryQuantEncoder&) {
            const Vector lo = z.rowwise().minCoeff();
            const Vector hi = z.rowwise().maxCoeff();
            Matrix probs = Matrix::Zero(z.rows(), z.cols());
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
              const double delta = hi(i) - lo(i);
              if (delta > 0.0) probs.row(i) = (z.row(i).array() - lo(i)) / delta;
            }
            return mse_closed_variable(z, probs, lo);
          },
          [&](const TernaryEncoder& e) { return mse_closed_ternary(z, e.params); },
      },
      pipeline.encoder);
}

MseReport mse_empirical(const Dataset& data, const Pipeline& pipeline, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("mse_empirical: need at least 100 trials");
  const Matrix z = encoder_input(pipeline, data.values());
  validate(pipeline.encoder, z);
  const Vector truth = data.mean();
  const auto d = static_cast<std::size_t>(data.d());
  const auto dz = static_cast<std::size_t>(z.cols());
  const auto n = static_cast<std::size_t>(data.n());

  std::vector<double> errors(trials);
  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    std::vector<EncodedVector> encoded;
    encoded.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      encoded.push_back(
          encode_node(pipeline.encoder, i, z.row(static_cast<Eigen::Index>(i)).transpose(), derive_seed(trial_seed, i)));
    }
    const Vector estimate = finish_decode(pipeline, decode_average(encoded, dz), d);
    errors[t] = (estimate - truth).squaredNorm();
  });

  MseReport report;
  report.trials = trials;
  report.closed_form = closed_form_mse(data, pipeline);
  report.empirical = pairwise_sum(errors) / static_cast<double>(trials);
  std::vector<double> sq(trials);
  for (std::size_t t = 0; t < trials; ++t) sq[t] = (errors[t] - report.empirical) * (errors[t] - report.empirical);
  const double var = pairwise_sum(sq) / static_cast<double>(trials - 1);
  report.std_error = std::sqrt(var / static_cast<double>(trials));
  return report;
}

}  // namespace dme
