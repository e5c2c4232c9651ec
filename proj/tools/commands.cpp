#include "commands.hpp"

#include "dme/analysis.hpp"
#include "dme/optimizer.hpp"
#include "dme/simharness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace dme::cli {

namespace {

struct Options {
  std::size_t n = 16;
  std::size_t d = 512;
  std::string dist = "gaussian";
  std::string data;
  std::uint64_t seed = 0;
  unsigned r = 16;
  unsigned rbar = 16;
  unsigned rseed = 64;
  double p = 1.0 / 16;
  std::size_t k = 0;
  std::vector<double> budget_b;
  std::vector<double> budget_bits;
  std::vector<std::string> strategies;
  std::size_t trials = 1000;
  std::string format;
  std::string out;
  std::string mode = "free";
  std::string encoder = "variable";
  std::uint64_t rotate = 0;
  double epsilon = 0.0;
  bool shuffle = false;

  /// The subcommand that was parsed.
  const CLI::App* sub = nullptr;

  bool given(const std::string& flag) const { return sub->count(flag) > 0; }

  BitSizes sizes() const {
    BitSizes s{r, given("--rbar") ? rbar : r, rseed};
    s.validate();
    return s;
  }
};

const std::vector<std::string> kStrategies{"uniform_p_row_mean_centers", "optimal_p_row_mean_centers",
                                           "optimal_p_optimal_centers", "binary_quantization_point"};

void add_data_options(CLI::App& sub, Options& o) {
  sub.add_option("--n", o.n, "Number of nodes for generated data")->check(CLI::PositiveNumber);
  sub.add_option("--d", o.d, "Dimension for generated data")->check(CLI::PositiveNumber);
  sub.add_option("--dist", o.dist, "gaussian | laplace | chi_squared");
  sub.add_option("--data", o.data, "Read the dataset from this CSV instead of generating it");
  sub.add_option("--seed", o.seed, "Master seed");
}

void add_size_options(CLI::App& sub, Options& o) {
  sub.add_option("--r", o.r, "Bits per wire float (16, 32 or 64)");
  sub.add_option("--rbar", o.rbar, "Bits for the node center (0 or r; default r)");
  sub.add_option("--rseed", o.rseed, "Bits for a seed (64)");
}

Dataset load_dataset(const Options& o) {
  if (!o.data.empty()) return read_csv(std::filesystem::path(o.data));
  return gen_synthetic(parse_distribution(o.dist), static_cast<Eigen::Index>(o.n), static_cast<Eigen::Index>(o.d),
                       o.seed);
}

/// Calls `body` with the --out file, or with `fallback` when --out is empty.
void with_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  body(file);
  if (!file) throw IoError("write to '" + path + "' failed");
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

Vector centers_for(const Options& o, const Matrix& x) {
  if (o.sizes().r_bar == 0) return Vector::Zero(x.rows());
  return x.rowwise().mean();
}

// gen ----------------------------------------------------------------------

void cmd_gen(const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(o);
  with_output(o.out, out, [&](std::ostream& s) { write_csv(s, data); });
}

// table1 -------------------------------------------------------------------

void cmd_table1(const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(o);
  const BitSizes sz = o.sizes();
  const Vector mu = data.row_means();
  const auto n = static_cast<std::size_t>(data.n());
  const auto d = static_cast<std::size_t>(data.d());
  const double dd = static_cast<double>(d);
  std::ostringstream csv;
  csv << "p,expected_cost_bits,closed_mse,empirical_mse,std_error\n";
  for (double p : {1.0, 1.0 / std::log2(dd), 1.0 / static_cast<double>(sz.r), 1.0 / dd}) {
    const Pipeline pipe{VariableEncoder{EncoderParams::uniform(data, std::min(p, 1.0), mu)}, std::nullopt};
    const double cost = expected_cost_uniform(Format::SparseSeeded, std::min(p, 1.0), sz, n, d);
    csv << format_double(p) << ',' << format_double(cost) << ',';
    if (o.trials > 0) {
      const MseReport rep = mse_empirical(data, pipe, o.trials, o.seed);
      csv << format_double(rep.closed_form) << ',' << format_double(rep.empirical) << ','
          << format_double(rep.std_error) << '\n';
    } else {
      csv << format_double(closed_form_mse(data, pipe)) << ",,\n";
    }
  }
  with_output(o.out, out, [&](std::ostream& s) { s << csv.str(); });
}

// curve --------------------------------------------------------------------

std::vector<double> curve_budgets(const Options& o, const Dataset& data, const BitSizes& sz) {
  std::vector<double> budgets;
  const auto n = static_cast<std::size_t>(data.n());
  const auto d = static_cast<std::size_t>(data.d());
  if (o.given("--budget-B")) {
    budgets = o.budget_b;
  } else if (o.given("--budget-bits")) {
    for (double bits : o.budget_bits) budgets.push_back(budget_from_bits(bits, sz, n, d));
  } else {
    // 10 log-spaced budgets from nd/512 to nd/2.
    const double nd = static_cast<double>(n * d);
    for (int t = 0; t < 10; ++t) budgets.push_back(nd / 512.0 * std::pow(256.0, t / 9.0));
  }
  for (double b : budgets) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("budgets must be positive");
  }
  std::sort(budgets.begin(), budgets.end());
  return budgets;
}

void cmd_curve(const Options& o, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(o);
  const BitSizes sz = o.sizes();
  const auto n = static_cast<std::size_t>(data.n());
  const auto d = static_cast<std::size_t>(data.d());
  const Matrix& x = data.values();
  const Vector mu = centers_for(o, x);
  const SpreadStats stats = spread_stats(x, mu);
  const auto support = static_cast<double>(stats.support_size);
  if (stats.support_size == 0) throw std::invalid_argument("curve: every entry equals its center");

  std::vector<std::string> strategies = o.strategies.empty() ? kStrategies : o.strategies;
  for (const auto& s : strategies) {
    if (std::find(kStrategies.begin(), kStrategies.end(), s) == kStrategies.end()) {
      throw std::invalid_argument("unknown strategy '" + s + "'");
    }
  }
  const std::vector<double> budgets = curve_budgets(o, data, sz);

  std::ostringstream csv;
  csv << "strategy,budget_B,cost_bits,closed_mse,empirical_mse,std_error,note\n";
  auto emit = [&](const std::string& name, const std::string& budget, double cost, const Pipeline& pipe,
                  const std::string& note) {
    csv << name << ',' << budget << ',' << format_double(cost) << ',';
    if (o.trials > 0) {
      const MseReport rep = mse_empirical(data, pipe, o.trials, o.seed);
      csv << format_double(rep.closed_form) << ',' << format_double(rep.empirical) << ','
          << format_double(rep.std_error);
    } else {
      csv << format_double(closed_form_mse(data, pipe)) << ",,";
    }
    csv << ',' << note << '\n';
  };

  for (const auto& strategy : strategies) {
    if (strategy == "binary_quantization_point") {
      emit(strategy, "", expected_cost_uniform(Format::Binary, 0.0, sz, n, d), {BinaryQuantEncoder{}, std::nullopt},
           "");
      continue;
    }
    for (double requested : budgets) {
      const double B = std::min(requested, support);
      std::string note;
      if (B < requested) {
        note = "budget clipped from " + format_double(requested) + " to |S|";
        err << "warning: " << strategy << ": " << note << '\n';
      }
      EncoderParams params;
      if (strategy == "uniform_p_row_mean_centers") {
        params.centers = mu;
        params.probs = (stats.a.array() > 0.0).cast<double>() * (B / support);
      } else if (strategy == "optimal_p_row_mean_centers") {
        params.centers = mu;
        params.probs = optimal_probs_given_centers(stats.a, B);
      } else {
        params = alternating_minimize({data, B, std::nullopt, std::nullopt}).params;
      }
      emit(strategy, format_double(B), cost_from_budget(B, sz, n, d),
           {VariableEncoder{std::move(params)}, std::nullopt}, note);
    }
  }
  with_output(o.out, out, [&](std::ostream& s) { s << csv.str(); });
}

// optimize -----------------------------------------------------------------

void cmd_optimize(const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(o);
  const BitSizes sz = o.sizes();
  const auto n = static_cast<std::size_t>(data.n());
  const auto d = static_cast<std::size_t>(data.d());
  if (o.budget_b.size() + o.budget_bits.size() != 1) {
    throw std::invalid_argument("optimize: give exactly one of --budget-B or --budget-bits");
  }
  const double B = o.given("--budget-B") ? o.budget_b.front() : budget_from_bits(o.budget_bits.front(), sz, n, d);
  if (!(B > 0.0) || B > static_cast<double>(n * d)) throw std::out_of_range("optimize: budget must satisfy 0 < B <= nd");
  if (o.mode != "fixed" && o.mode != "free") throw std::invalid_argument("optimize: --mode must be fixed or free");

  std::optional<Vector> fixed;
  if (o.mode == "fixed") fixed = centers_for(o, data.values());
  const Solution sol = alternating_minimize({data, B, fixed, std::nullopt});
  const SpreadStats stats = spread_stats(data.values(), sol.params.centers);
  const double used = std::min(B, static_cast<double>(stats.support_size));
  const MseBounds bounds = stats.support_size > 0 ? mse_bounds(stats, used, data.n()) : MseBounds{};
  const double cost = cost_from_budget(used, sz, n, d);

  out << "budget_B,cost_bits,objective,lower,upper,exact,iterations,converged\n"
      << format_double(used) << ',' << format_double(cost) << ',' << format_double(sol.objective) << ','
      << format_double(bounds.lower) << ',' << format_double(bounds.upper) << ',' << opt_field(bounds.exact) << ','
      << sol.iterations << ',' << (sol.converged ? "true" : "false") << '\n';

  if (o.out.empty()) return;
  with_output(o.out, out, [&](std::ostream& s) {
    s << "i,j,p\n";
    for (Eigen::Index i = 0; i < sol.params.probs.rows(); ++i) {
      for (Eigen::Index j = 0; j < sol.params.probs.cols(); ++j) {
        s << i << ',' << j << ',' << format_double(sol.params.probs(i, j)) << '\n';
      }
    }
  });
  nlohmann::json summary{{"objective", sol.objective},
                         {"iterations", sol.iterations},
                         {"converged", sol.converged},
                         {"mode", o.mode},
                         {"budget_B", used},
                         {"cost_bits", cost},
                         {"n", n},
                         {"d", d},
                         {"centers", std::vector<double>(sol.params.centers.begin(), sol.params.centers.end())},
                         {"bounds",
                          {{"lower", bounds.lower},
                           {"upper", bounds.upper},
                           {"exact", bounds.exact ? nlohmann::json(*bounds.exact) : nlohmann::json(nullptr)}}}};
  const std::string json_path = std::filesystem::path(o.out).replace_extension(".json").string();
  with_output(json_path, out, [&](std::ostream& s) { s << summary.dump(2) << '\n'; });
}

// simulate -----------------------------------------------------------------

Format default_format(const std::string& encoder) {
  if (encoder == "identity") return Format::Naive;
  if (encoder == "binary") return Format::Binary;
  if (encoder == "fixed" || encoder == "seeded_variable") return Format::SparseSeeded;
  return Format::SparseIndexed;
}

void cmd_simulate(const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(o);
  BitSizes sz = o.sizes();
  std::string encoder = o.encoder;
  double p = o.p;
  if (o.given("--epsilon")) {
    // Data-independent center, sparse indices, p = eps / (d (ceil(log2 d) + r)).
    if (!(o.epsilon > 0.0)) throw std::invalid_argument("simulate: --epsilon must be positive");
    encoder = "variable";
    sz.r_bar = 0;
    p = o.epsilon / (static_cast<double>(data.d()) * (ceil_log2(static_cast<std::size_t>(data.d())) + sz.r));
    if (p > 1.0) throw std::invalid_argument("simulate: --epsilon too large for p <= 1");
  }
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("simulate: --p must be in (0, 1]");

  Pipeline pipe;
  if (o.given("--rotate")) pipe.rotation_seed = o.rotate;
  const Matrix z = encoder_input(pipe, data.values());
  const Vector mu = sz.r_bar == 0 ? Vector(Vector::Zero(z.rows())) : Vector(z.rowwise().mean());
  const std::size_t dz = static_cast<std::size_t>(z.cols());
  const std::size_t k = o.given("--k") ? o.k : std::max<std::size_t>(1, dz / 16);

  Matrix listed;  // probability that each entry is sent as a non-center value
  if (encoder == "identity") {
    pipe.encoder = IdentityEncoder{};
    listed = Matrix::Ones(z.rows(), z.cols());
  } else if (encoder == "variable") {
    pipe.encoder = VariableEncoder{EncoderParams{Matrix::Constant(z.rows(), z.cols(), p), mu}};
    listed = Matrix::Constant(z.rows(), z.cols(), p);
  } else if (encoder == "seeded_variable") {
    pipe.encoder = SeededVariableEncoder{p, mu};
    listed = Matrix::Constant(z.rows(), z.cols(), p);
  } else if (encoder == "fixed") {
    pipe.encoder = FixedEncoder{k, mu};
    listed = Matrix::Constant(z.rows(), z.cols(), static_cast<double>(k) / static_cast<double>(dz));
  } else if (encoder == "binary") {
    pipe.encoder = BinaryQuantEncoder{};
    listed = Matrix::Zero(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double lo = z.row(i).minCoeff();
      const double delta = z.row(i).maxCoeff() - lo;
      if (delta > 0.0) listed.row(i) = (z.row(i).array() - lo) / delta;
    }
  } else {
    throw std::invalid_argument("simulate: unknown encoder '" + encoder + "'");
  }

  WireFormat fmt{o.format.empty() ? default_format(encoder) : parse_format(o.format), sz, std::nullopt};
  if (fmt.tag == Format::SparseSeeded && encoder == "seeded_variable") fmt.seeded_p = p;
  const RoundConfig cfg{pipe, fmt, o.trials, o.seed, o.shuffle};
  if (cfg.trials < 1) throw std::invalid_argument("simulate: --trials must be >= 1");

  const auto n = static_cast<std::size_t>(z.rows());
  double expected = 0.0;
  if (fmt.tag == Format::SparseSeeded && encoder == "fixed") {
    expected = expected_cost_fixed(sz, n, k);
  } else if (fmt.tag == Format::SparseSeeded) {
    expected = expected_cost_uniform(Format::SparseSeeded, p, sz, n, dz);
  } else {
    expected = expected_cost(fmt.tag, listed, sz);
  }

  const RunReport rep = run_trials(data, cfg);
  const double closed = closed_form_mse(data, pipe);
  if (!o.out.empty()) with_output(o.out, out, [&](std::ostream& s) { rep.write_csv(s); });
  out << "encoder,format,trials,mean_bits_total,bits_std_error,min_bits,max_bits,expected_bits,mean_sq_error,"
         "sq_error_std_error,closed_mse\n"
      << encoder << ',' << to_string(fmt.tag) << ',' << rep.trials << ',' << format_double(rep.mean_bits_total) << ','
      << format_double(rep.bits_std_error) << ',' << rep.min_bits << ',' << rep.max_bits << ','
      << format_double(expected) << ',' << format_double(rep.mean_sq_error) << ','
      << format_double(rep.sq_error_std_error) << ',' << format_double(closed) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed mean estimation: data generation, cost/error tables, curves, optimizer, simulation"};
  app.name("dme");
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
  add_data_options(*gen, o);
  gen->add_option("--out", o.out, "Output CSV (default stdout)");

  auto* table1 = app.add_subcommand("table1", "Uniform-p cost and MSE at p = 1, 1/log2 d, 1/r, 1/d");
  add_data_options(*table1, o);
  add_size_options(*table1, o);
  table1->add_option("--trials", o.trials, "Monte Carlo trials (0 skips the empirical columns)");
  table1->add_option("--out", o.out, "Output CSV (default stdout)");

  auto* curve = app.add_subcommand("curve", "Cost/MSE trade-off curves");
  add_data_options(*curve, o);
  add_size_options(*curve, o);
  curve->add_option("--budget-B", o.budget_b, "Budgets on the sum of probabilities");
  curve->add_option("--budget-bits", o.budget_bits, "Budgets in bits");
  curve->add_option("--strategy", o.strategies, "Strategies to run (default all)");
  curve->add_option("--trials", o.trials, "Monte Carlo trials per point (0 skips the empirical columns)");
  curve->add_option("--out", o.out, "Output CSV (default stdout)");

  auto* optimize = app.add_subcommand("optimize", "Optimal probabilities (and centers) for a budget");
  add_data_options(*optimize, o);
  add_size_options(*optimize, o);
  optimize->add_option("--budget-B", o.budget_b, "Budget on the sum of probabilities");
  optimize->add_option("--budget-bits", o.budget_bits, "Budget in bits");
  optimize->add_option("--mode", o.mode, "fixed (row-mean centers) or free (alternating minimization)");
  optimize->add_option("--out", o.out, "Probability CSV; the JSON summary goes next to it with a .json extension");

  auto* simulate = app.add_subcommand("simulate", "End-to-end rounds over the wire");
  add_data_options(*simulate, o);
  add_size_options(*simulate, o);
  simulate->add_option("--encoder", o.encoder, "identity | variable | seeded_variable | fixed | binary");
  simulate->add_option("--p", o.p, "Uniform probability for variable encoders");
  simulate->add_option("--k", o.k, "Support size for the fixed encoder (default d/16)");
  simulate->add_option("--format", o.format, "naive | varying_length | sparse_indexed | sparse_seeded | binary");
  simulate->add_option("--trials", o.trials, "Rounds to run");
  simulate->add_option("--rotate", o.rotate, "Apply a randomized Hadamard rotation with this seed");
  simulate->add_option("--epsilon", o.epsilon, "Expected payload bits per node; zero centers, r_bar = 0");
  simulate->add_flag("--shuffle", o.shuffle, "Deliver messages in a seeded random order");
  simulate->add_option("--out", o.out, "Per-trial CSV");

  std::vector<const char*> argv{"dme"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  try {
    o.sub = app.get_subcommands().front();
    if (*gen) {
      cmd_gen(o, out);
    } else if (*table1) {
      cmd_table1(o, out);
    } else if (*curve) {
      cmd_curve(o, out, err);
    } else if (*optimize) {
      cmd_optimize(o, out);
    } else if (*simulate) {
      cmd_simulate(o, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace dme::cli
