#pragma once

#include "dme/dataset.hpp"
#include "dme/pipeline.hpp"
#include "dme/wire.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dme {

/// One star-topology configuration: encoder (and rotation), wire format, trial count, master seed.
struct RoundConfig {
  Pipeline pipeline;
  WireFormat format;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  /// Deliver messages to the server in a seed-shuffled order.
  bool shuffle_delivery = false;
};

/// Throws std::invalid_argument when encoder and wire format cannot work together.
void validate(const RoundConfig& cfg, const Dataset& data);

/**
 * Server end of the star. It sees framed bit strings only; d and the static
 * configuration are the sole out-of-band knowledge.
 */
class Server {
 public:
  Server(std::size_t n, std::size_t d, WireFormat format, Pipeline pipeline);

  /// Throws WireError on a malformed frame, a wrong format tag or a duplicate node id.
  void receive(const BitStream& framed);
  /// Averaged estimate; throws WireError if any node's message is missing.
  Vector finish() const;

 private:
  std::size_t n_;
  std::size_t d_;
  WireFormat format_;
  Pipeline pipeline_;
  std::vector<std::optional<EncodedVector>> received_;
};

struct RoundResult {
  Vector estimate;
  std::size_t bits_total = 0;     // protocol payload bits over all nodes
  std::size_t overhead_bits = 0;  // frame headers, outside the protocol cost
  double sq_error = 0.0;          // ||estimate - X||^2
};

struct TrialRow {
  std::size_t trial = 0;
  std::size_t bits_total = 0;
  std::size_t overhead_bits = 0;
  double sq_error = 0.0;
};

struct RunReport {
  double mean_sq_error = 0.0;
  double sq_error_std_error = 0.0;
  double mean_bits_total = 0.0;
  double bits_std_error = 0.0;
  std::size_t min_bits = 0;
  std::size_t max_bits = 0;
  std::size_t trials = 0;
  std::vector<TrialRow> rows;

  /// Per-trial CSV: trial,bits_total,overhead_bits,sq_error
  void write_csv(std::ostream& out) const;
};

/// One full round: encode, serialize, frame, queue, deliver, decode.
RoundResult run_round(const Dataset& data, const RoundConfig& cfg, std::uint64_t trial_seed);

/// cfg.trials rounds, trial t seeded with derive_seed(cfg.seed, t).
RunReport run_trials(const Dataset& data, const RoundConfig& cfg);

}  // namespace dme
