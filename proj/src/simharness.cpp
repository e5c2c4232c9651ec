#include "dme/simharness.hpp"

#include "dme/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>

namespace dme {

void validate(const RoundConfig& cfg, const Dataset& data) {
  cfg.format.sizes.validate();
  if (cfg.trials < 1) throw std::invalid_argument("RoundConfig: trials must be >= 1");
  if (data.n() > (Eigen::Index{1} << kNodeIdBits)) throw std::invalid_argument("RoundConfig: too many nodes for a 16-bit id");
  const Matrix z = encoder_input(cfg.pipeline, data.values());
  validate(cfg.pipeline.encoder, z);

  const auto& enc = cfg.pipeline.encoder;
  switch (cfg.format.tag) {
    case Format::SparseSeeded:
      if (std::holds_alternative<FixedEncoder>(enc)) {
        if (cfg.format.seeded_p) throw std::invalid_argument("RoundConfig: fixed encoder uses subset seeding, unset seeded_p");
      } else if (const auto* s = std::get_if<SeededVariableEncoder>(&enc)) {
        if (cfg.format.seeded_p != s->p) throw std::invalid_argument("RoundConfig: seeded_p must equal the encoder's p");
      } else {
        throw std::invalid_argument("RoundConfig: SparseSeeded needs the fixed or seeded variable encoder");
      }
      break;
    case Format::Binary:
      if (!std::holds_alternative<BinaryQuantEncoder>(enc)) {
        throw std::invalid_argument("RoundConfig: Binary format needs the binary quantization encoder");
      }
      break;
    default:
      break;
  }
}

Server::Server(std::size_t n, std::size_t d, WireFormat format, Pipeline pipeline)
    : n_(n), d_(d), format_(std::move(format)), pipeline_(std::move(pipeline)), received_(n) {}

void Server::receive(const BitStream& framed) {
  WireMessage msg = unframe(framed);
  if (msg.node_id >= n_) throw WireError("server: node id " + std::to_string(msg.node_id) + " out of range");
  if (received_[msg.node_id]) throw WireError("server: duplicate message from node " + std::to_string(msg.node_id));
  received_[msg.node_id] = deserialize(msg, encoded_dim(pipeline_, d_), format_);
}

Vector Server::finish() const {
  std::vector<EncodedVector> encoded;
  encoded.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!received_[i]) throw WireError("server: no message from node " + std::to_string(i));
    encoded.push_back(*received_[i]);
  }
  return finish_decode(pipeline_, decode_average(encoded, encoded_dim(pipeline_, d_)), d_);
}

RoundResult run_round(const Dataset& data, const RoundConfig& cfg, std::uint64_t trial_seed) {
  const auto n = static_cast<std::size_t>(data.n());
  const auto d = static_cast<std::size_t>(data.d());
  const Matrix z = encoder_input(cfg.pipeline, data.values());

  RoundResult result;
  std::deque<BitStream> transport;
  for (std::size_t i = 0; i < n; ++i) {
    const EncodedVector y =
        encode_node(cfg.pipeline.encoder, i, z.row(static_cast<Eigen::Index>(i)).transpose(), derive_seed(trial_seed, i));
    const WireMessage msg = serialize(y, cfg.format);
    result.bits_total += msg.bit_length();
    result.overhead_bits += kHeaderBits;
    transport.push_back(frame(msg));
  }
  if (cfg.shuffle_delivery) {
    Rng rng(derive_seed(trial_seed, n));
    for (std::size_t i = transport.size(); i > 1; --i) std::swap(transport[i - 1], transport[rng.below(i)]);
  }

  Server server(n, d, cfg.format, cfg.pipeline);
  while (!transport.empty()) {
    server.receive(transport.front());
    transport.pop_front();
  }
  result.estimate = server.finish();
  result.sq_error = (result.estimate - data.mean()).squaredNorm();
  return result;
}

RunReport run_trials(const Dataset& data, const RoundConfig& cfg) {
  validate(cfg, data);
  RunReport report;
  report.trials = cfg.trials;
  report.rows.resize(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    const RoundResult r = run_round(data, cfg, derive_seed(cfg.seed, t));
    report.rows[t] = TrialRow{t, r.bits_total, r.overhead_bits, r.sq_error};
  });

  std::vector<double> err(cfg.trials);
  std::vector<double> bits(cfg.trials);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    err[t] = report.rows[t].sq_error;
    bits[t] = static_cast<double>(report.rows[t].bits_total);
  }
  const auto count = static_cast<double>(cfg.trials);
  report.mean_sq_error = pairwise_sum(err) / count;
  report.mean_bits_total = pairwise_sum(bits) / count;
  const auto [lo, hi] = std::minmax_element(bits.begin(), bits.end());
  report.min_bits = static_cast<std::size_t>(*lo);
  report.max_bits = static_cast<std::size_t>(*hi);
  if (cfg.trials > 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      err[t] = (err[t] - report.mean_sq_error) * (err[t] - report.mean_sq_error);
      bits[t] = (bits[t] - report.mean_bits_total) * (bits[t] - report.mean_bits_total);
    }
    report.sq_error_std_error = std::sqrt(pairwise_sum(err) / (count - 1) / count);
    report.bits_std_error = std::sqrt(pairwise_sum(bits) / (count - 1) / count);
  }
  return report;
}

void RunReport::write_csv(std::ostream& out) const {
  out << "trial,bits_total,overhead_bits,sq_error\n";
  for (const TrialRow& r : rows) {
    out << r.trial << ',' << r.bits_total << ',' << r.overhead_bits << ',' << format_double(r.sq_error) << '\n';
  }
}

}  // namespace dme
