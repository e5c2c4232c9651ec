#include "dme/pipeline.hpp"

#include <stdexcept>

namespace dme {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_centers(const Vector& centers, Eigen::Index n, const char* who) {
  if (centers.size() != n) throw std::invalid_argument(std::string(who) + ": need one center per node");
}

}  // namespace

std::string encoder_name(const EncoderConfig& encoder) {
  return std::visit(overloaded{
                        [](const IdentityEncoder&) { return std::string("identity"); },
                        [](const VariableEncoder&) { return std::string("variable"); },
                        [](const SeededVariableEncoder&) { return std::string("seeded"); },
                        [](const FixedEncoder&) { return std::string("fixed"); },
                        [](const BinaryQuantEncoder&) { return std::string("binary"); },
                        [](const TernaryEncoder&) { return std::string("ternary"); },
                    },
                    encoder);
}

std::size_t encoded_dim(const Pipeline& pipeline, std::size_t d) noexcept {
  return pipeline.rotation_seed ? padded_dim(d) : d;
}

void validate(const EncoderConfig& encoder, const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  std::visit(overloaded{
                 [](const IdentityEncoder&) {},
                 [&](const VariableEncoder& e) { e.params.validate(x); },
                 [&](const SeededVariableEncoder& e) {
                   require_centers(e.centers, n, "seeded encoder");
                   if (!(e.p > 0.0 && e.p <= 1.0)) throw std::invalid_argument("seeded encoder: p must be in (0, 1]");
                 },
                 [&](const FixedEncoder& e) {
                   require_centers(e.centers, n, "fixed encoder");
                   if (e.k < 1 || static_cast<Eigen::Index>(e.k) > d) {
                     throw std::invalid_argument("fixed encoder: k must be in [1, d]");
                   }
                 },
                 [](const BinaryQuantEncoder&) {},
                 [&](const TernaryEncoder& e) { e.params.validate(n, d); },
             },
             encoder);
}

EncodedVector encode_node(const EncoderConfig& encoder, std::size_t node, const ConstVecRef& x,
                          std::uint64_t node_seed) {
  const auto i = static_cast<Eigen::Index>(node);
  return std::visit(
      overloaded{
          [&](const IdentityEncoder&) { return EncodedVector::from_dense(node, 0.0, x); },
          [&](const VariableEncoder& e) {
            Rng rng(node_seed);
            return encode_variable(node, x, e.params.probs.row(i).transpose(), e.params.centers(i), rng);
          },
          [&](const SeededVariableEncoder& e) {
            return encode_variable_seeded(node, x, e.p, e.centers(i), node_seed);
          },
          [&](const FixedEncoder& e) { return encode_fixed(node, x, e.k, e.centers(i), node_seed); },
          [&](const BinaryQuantEncoder&) {
            Rng rng(node_seed);
            return encode_binary_quant(node, x, rng);
          },
          [&](const TernaryEncoder& e) {
            Rng rng(node_seed);
            const Vector y = encode_ternary(x, e.params, i, rng);
            return EncodedVector::from_dense(node, e.params.low(i), y);
          },
      },
      encoder);
}

Matrix encoder_input(const Pipeline& pipeline, const Matrix& x) {
  return pipeline.rotation_seed ? rotate_rows(x, *pipeline.rotation_seed) : x;
}

Vector finish_decode(const Pipeline& pipeline, Vector average, std::size_t d) {
  if (!pipeline.rotation_seed) return average;
  return unrotate(average, *pipeline.rotation_seed, d);
}

}  // namespace dme
