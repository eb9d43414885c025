#pragma once

// Command-line front end: synth, fit, predict, validate, rank, bench.
//
// Exit codes: 0 success / validation pass, 1 usage error, 2 invalid input
// data, 3 solver stalled or not converged, 4 validation failure. Every
// subcommand is deterministic given its flags and input files, wall-time
// fields excepted, and never mutates its inputs.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lplsp/dataio.hpp"
#include "lplsp/estimation.hpp"
#include "lplsp/plot.hpp"
#include "lplsp/synthdata.hpp"

namespace lplsp::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataInvalid = 2;
constexpr int kExitSolverStalled = 3;
constexpr int kExitValidationFail = 4;

namespace detail {

struct UsageError : Error {
  using Error::Error;
};

inline Parameterization method_from_name(const std::string& name, int rank) {
  if (name == "naive") return Parameterization::full();
  if (name == "symmetric") return Parameterization::symmetric();
  if (name == "lowrank") return Parameterization::low_rank(rank);
  if (name == "two-stage") return Parameterization::two_stage();
  throw UsageError("unknown method '" + name +
                   "' (expected naive|symmetric|lowrank|two-stage)");
}

// Shape rules checked before any computation so usage errors never leave
// partial output files behind.
inline void check_method_shape(const Parameterization& variant,
                               const TransientDataset& dataset) {
  validate_variant(variant, dataset.monitor_count(), dataset.source_count());
  if ((variant.kind == Parameterization::Kind::Symmetric ||
       variant.kind == Parameterization::Kind::TwoStage) &&
      dataset.colocated_count() != dataset.source_count()) {
    throw UsageError(variant.name() +
                     " fits require colocated_count == N (dataset declares " +
                     std::to_string(dataset.colocated_count()) + ")");
  }
}

inline nlohmann::ordered_json fit_report_json(const FitReport& report,
                                              const std::string& method,
                                              std::optional<int> rank) {
  nlohmann::ordered_json doc;
  doc["method"] = method;
  if (rank) doc["rank"] = *rank;
  doc["M"] = report.model.monitor_count();
  doc["N"] = report.model.source_count();
  doc["param_count"] = report.param_count;
  doc["per_monitor_mpe_percent"] =
      std::vector<double>(report.per_monitor_mpe.data(),
                          report.per_monitor_mpe.data() + report.per_monitor_mpe.size());
  doc["mpe_skipped_samples"] = report.mpe_skipped;
  doc["residual_norm"] = report.residual_norm;
  std::vector<int> iterations;
  std::vector<int> jacobian_evals;
  std::vector<std::string> terminations;
  for (const SolverResult& s : report.solver) {
    iterations.push_back(s.iterations);
    jacobian_evals.push_back(s.jacobian_evals);
    terminations.push_back(to_string(s.termination));
  }
  doc["iterations"] = iterations;
  doc["jacobian_evals"] = jacobian_evals;
  doc["terminations"] = terminations;
  doc["converged"] = report.converged();
  doc["elapsed_s"] = report.elapsed_s;
  return doc;
}

inline void write_json(const nlohmann::ordered_json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + path + "' for writing");
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw IOError("write failed for '" + path + "'");
  }
}

struct SolverFlags {
  int max_iterations = SolverOptions{}.max_iterations;
  double cost_tol = SolverOptions{}.cost_tolerance;
  double step_tol = SolverOptions{}.step_tolerance;
  double grad_tol = SolverOptions{}.gradient_tolerance;
  double fd_step = SolverOptions{}.fd_step;

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iterations, "Maximum accepted steps");
    cmd->add_option("--cost-tol", cost_tol, "Relative cost-decrease tolerance");
    cmd->add_option("--step-tol", step_tol, "Relative step tolerance");
    cmd->add_option("--grad-tol", grad_tol, "Gradient infinity-norm tolerance");
    cmd->add_option("--fd-step", fd_step, "Relative finite-difference step");
  }

  SolverOptions options() const {
    SolverOptions opts;
    opts.max_iterations = max_iterations;
    opts.cost_tolerance = cost_tol;
    opts.step_tolerance = step_tol;
    opts.gradient_tolerance = grad_tol;
    opts.fd_step = fd_step;
    return opts;
  }
};

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  Index sources = 2;
  Index monitors = 2;
  double duration = 300.0;
  double dt = 1.0;
  Index segments = 8;
  double amp_min = 0.0;
  double amp_max = 2.0;
  double noise = 0.0;
  double t0 = 20.0;
  double decay = 0.3;
  bool symmetric = false;
  int rank = 0;  // 0 = no rank projection
  std::uint64_t seed = 1;
  std::string out;
  std::string truth_path;
};

inline int run_synth(const SynthArgs& args, bool verbose) {
  TruthSpec truth_spec;
  truth_spec.monitor_count = args.monitors;
  truth_spec.source_count = args.sources;
  truth_spec.symmetric = args.symmetric;
  truth_spec.coupling_decay = args.decay;
  if (args.rank > 0) truth_spec.target_rank = args.rank;
  truth_spec.t0_celsius = args.t0;
  truth_spec.seed = args.seed;
  const CouplingModel truth = generate_truth(truth_spec);

  ProfileSpec profile;
  profile.duration = args.duration;
  profile.sample_interval = args.dt;
  profile.segment_count = args.segments;
  profile.amplitude_min = args.amp_min;
  profile.amplitude_max = args.amp_max;
  profile.seed = args.seed;
  auto [grid, powers] = generate_excitation(profile, args.sources);

  const TransientDataset dataset =
      synthesize_dataset(truth, powers, grid, args.noise, args.seed);
  write_dataset(dataset, args.out);
  save_model(truth, args.truth_path);

  std::cout << "synth: M=" << args.monitors << " N=" << args.sources
            << " T_len=" << grid.size() << " noise=" << args.noise
            << " seed=" << args.seed << "\n";
  if (verbose) {
    std::cout << "  dataset -> " << args.out << "\n  truth   -> "
              << args.truth_path << "\n";
  }
  return kExitOk;
}

// --- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string method;
  int rank = 2;
  std::string out;
  std::string report;
  SolverFlags solver;
};

inline int run_fit(const FitArgs& args, bool verbose) {
  const Parameterization variant = method_from_name(args.method, args.rank);
  const TransientDataset dataset = read_dataset(args.data);
  check_method_shape(variant, dataset);

  const FitReport report = fit_any(dataset, variant, args.solver.options());
  save_model(report.model, args.out);
  if (!args.report.empty()) {
    const std::optional<int> rank =
        variant.kind == Parameterization::Kind::LowRank
            ? std::optional<int>(variant.rank)
            : std::nullopt;
    write_json(fit_report_json(report, args.method, rank), args.report);
  }

  std::cout << "fit: method=" << args.method << " params=" << report.param_count
            << " residual_norm=" << report.residual_norm
            << " max_mpe=" << report.per_monitor_mpe.maxCoeff() << "%\n";
  if (verbose) {
    for (const SolverResult& s : report.solver) {
      std::cout << "  termination=" << to_string(s.termination)
                << " iterations=" << s.iterations << "\n";
    }
  }
  return report.converged() ? kExitOk : kExitSolverStalled;
}

// --- predict -----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string inputs;
  std::string out;
  std::string plot;
};

inline int run_predict(const PredictArgs& args, bool /*verbose*/) {
  const CouplingModel model = load_model(args.model);
  auto [grid, powers] = read_powers(args.inputs);
  if (powers.source_count() != model.source_count()) {
    throw DimensionError("predict: model expects " +
                         std::to_string(model.source_count()) +
                         " power columns, inputs provide " +
                         std::to_string(powers.source_count()));
  }
  const TemperatureSeries temps = predict(model, powers, grid);
  Index coloc = std::min(model.monitor_count(), model.source_count());
  if (model.provenance() && model.provenance()->colocated_count) {
    coloc = std::clamp<Index>(*model.provenance()->colocated_count, 0, coloc);
  }
  write_dataset(TransientDataset(grid, powers, temps, model.t0(), coloc),
                args.out);
  if (!args.plot.empty()) {
    write_traces_plot(grid, temps, args.plot);
  }
  std::cout << "predict: monitors=" << temps.monitor_count()
            << " T_len=" << grid.size() << " -> " << args.out << "\n";
  return kExitOk;
}

// --- validate ----------------------------------------------------------------

struct ValidateArgs {
  std::string model;
  std::string data;
  std::string report;
  std::string plot;
  double threshold = 5.0;  // percent
};

inline int run_validate(const ValidateArgs& args, bool /*verbose*/) {
  const CouplingModel model = load_model(args.model);
  const TransientDataset dataset = read_dataset(args.data);
  if (dataset.source_count() != model.source_count() ||
      dataset.monitor_count() != model.monitor_count()) {
    throw DimensionError("validate: model is " +
                         std::to_string(model.monitor_count()) + "x" +
                         std::to_string(model.source_count()) + ", dataset is " +
                         std::to_string(dataset.monitor_count()) + "x" +
                         std::to_string(dataset.source_count()));
  }
  const TemperatureSeries pred =
      predict(model, dataset.powers(), dataset.grid());
  const MpeResult mpe = mean_percentage_error(pred, dataset.temperatures());
  Vector max_abs(dataset.monitor_count());
  for (Index i = 0; i < dataset.monitor_count(); ++i) {
    max_abs(i) = (pred.row(i) - dataset.temperatures().row(i))
                     .cwiseAbs()
                     .maxCoeff();
  }
  const bool pass = (mpe.per_monitor.array() <= args.threshold).all();

  nlohmann::ordered_json doc;
  doc["per_monitor_mpe_percent"] = std::vector<double>(
      mpe.per_monitor.data(), mpe.per_monitor.data() + mpe.per_monitor.size());
  doc["mpe_skipped_samples"] = mpe.skipped_samples;
  doc["max_abs_error_celsius"] =
      std::vector<double>(max_abs.data(), max_abs.data() + max_abs.size());
  doc["threshold_percent"] = args.threshold;
  doc["pass"] = pass;
  if (!args.report.empty()) {
    write_json(doc, args.report);
  }
  if (!args.plot.empty()) {
    write_validation_plot(dataset.grid(), dataset.temperatures(), pred,
                          args.plot);
  }
  std::cout << "validate: max_mpe=" << mpe.per_monitor.maxCoeff()
            << "% threshold=" << args.threshold << "% -> "
            << (pass ? "pass" : "fail") << "\n";
  return pass ? kExitOk : kExitValidationFail;
}

// --- rank --------------------------------------------------------------------

struct RankArgs {
  std::string model;
  double tau = 0.9;
};

inline int run_rank(const RankArgs& args, bool /*verbose*/) {
  if (!(args.tau > 0.0 && args.tau <= 1.0)) {
    throw UsageError("--tau must lie in (0, 1]");
  }
  const CouplingModel model = load_model(args.model);
  const auto [r_rank, k_rank] = suggest_rank(model, args.tau);
  const auto spectrum = [](const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    Vector sigma = svd.singularValues();
    if (sigma(0) > 0.0) sigma /= sigma(0);
    return sigma;
  };
  const auto print_spectrum = [](const char* label, int rank, const Vector& sigma) {
    std::cout << label << ": r*=" << rank << "  sigma/sigma1 =";
    for (Index i = 0; i < sigma.size(); ++i) std::cout << ' ' << sigma(i);
    std::cout << "\n";
  };
  print_spectrum("R", r_rank, spectrum(model.R()));
  print_spectrum("K", k_rank, spectrum(model.K()));
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string sizes = "2,3,6";            // square N or MxN tokens
  std::string methods = "naive,symmetric,lowrank,two-stage";
  int repeats = 3;
  int rank = 2;
  double duration = 120.0;
  double dt = 1.0;
  Index segments = 6;
  std::uint64_t seed = 1;
  std::string out;
};

struct BenchShape {
  Index monitors = 0;
  Index sources = 0;
  std::string label;
};

inline std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  size_t begin = 0;
  while (begin <= csv.size()) {
    const size_t comma = csv.find(',', begin);
    if (comma == std::string::npos) {
      out.push_back(csv.substr(begin));
      break;
    }
    out.push_back(csv.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return out;
}

inline BenchShape parse_size(const std::string& token) {
  const size_t x = token.find('x');
  try {
    if (x == std::string::npos) {
      const Index n = std::stol(token);
      return {n, n, token};
    }
    const Index m = std::stol(token.substr(0, x));
    const Index n = std::stol(token.substr(x + 1));
    return {m, n, token};
  } catch (const std::exception&) {
    throw UsageError("bad size token '" + token + "' (expected N or MxN)");
  }
}

inline int run_bench(const BenchArgs& args, bool verbose) {
  if (args.repeats < 1) {
    throw UsageError("--repeats must be >= 1");
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + args.out + "' for writing");
  }
  out << "size,method,params,median_s,mpe_train\n";

  for (const std::string& size_token : split_list(args.sizes)) {
    const BenchShape shape = parse_size(size_token);
    if (shape.monitors < 1 || shape.sources < 1) {
      throw UsageError("bad size token '" + size_token + "'");
    }

    // Correlated rank-structured systems: realizable by every method under
    // comparison, so the rows measure fit cost rather than model mismatch.
    const std::uint64_t truth_seed =
        args.seed + static_cast<std::uint64_t>(shape.monitors) * 131 +
        static_cast<std::uint64_t>(shape.sources);
    const int truth_rank = static_cast<int>(
        std::min<Index>(args.rank, std::min(shape.monitors, shape.sources)));
    const CouplingModel truth = generate_correlated_truth(
        shape.monitors, shape.sources, std::max(truth_rank, 1), truth_seed);

    ProfileSpec profile;
    profile.duration = args.duration;
    profile.sample_interval = args.dt;
    profile.segment_count = args.segments;
    profile.amplitude_min = 0.0;
    profile.amplitude_max = 2.0;
    profile.seed = truth_seed;
    auto [grid, powers] = generate_excitation(profile, shape.sources);
    const TransientDataset dataset = synthesize_dataset(truth, powers, grid);

    for (const std::string& method : split_list(args.methods)) {
      Parameterization variant = method_from_name(method, args.rank);
      try {
        check_method_shape(variant, dataset);
      } catch (const Error& e) {
        std::cerr << "bench: skipping " << method << " at size " << shape.label
                  << ": " << e.what() << "\n";
        continue;
      }
      std::vector<double> times;
      double mpe_train = 0.0;
      Index params = 0;
      try {
        for (int rep = 0; rep < args.repeats; ++rep) {
          const FitReport report = fit_any(dataset, variant);
          times.push_back(report.elapsed_s);
          mpe_train = report.per_monitor_mpe.maxCoeff();
          params = report.param_count;
        }
      } catch (const Error& e) {
        std::cerr << "bench: skipping " << method << " at size " << shape.label
                  << ": " << e.what() << "\n";
        continue;
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      out << shape.label << ',' << method << ',' << params << ','
          << median << ',' << mpe_train << "\n";
      if (verbose) {
        std::cout << "bench: size=" << shape.label << " method=" << method
                  << " median_s=" << median << "\n";
      }
    }
  }
  if (!out) {
    throw IOError("write failed for '" + args.out + "'");
  }
  std::cout << "bench: wrote " << args.out << "\n";
  return kExitOk;
}

}  // namespace detail

inline int run(std::vector<std::string> args) {
  CLI::App app{"Reduced-order thermal model identification from a single "
               "transient dataset (lumped-parameter linear superposition)"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name
  bool verbose = false;
  app.add_flag("--verbose", verbose, "Chatty progress output");

  detail::SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic truth model and dataset");
  synth_cmd->add_option("--sources", synth.sources, "Number of heat sources N")
      ->required();
  synth_cmd->add_option("--monitors", synth.monitors, "Number of monitor points M")
      ->required();
  synth_cmd->add_option("--duration", synth.duration, "Profile duration, seconds");
  synth_cmd->add_option("--dt", synth.dt, "Sample interval, seconds");
  synth_cmd->add_option("--segments", synth.segments, "Constant segments per source");
  synth_cmd->add_option("--amp-min", synth.amp_min, "Minimum power level, watts");
  synth_cmd->add_option("--amp-max", synth.amp_max, "Maximum power level, watts");
  synth_cmd->add_option("--noise", synth.noise, "Relative rise-noise std dev");
  synth_cmd->add_option("--t0", synth.t0, "Initial temperature, degC");
  synth_cmd->add_option("--decay", synth.decay, "Coupling attenuation factor");
  synth_cmd->add_flag("--symmetric", synth.symmetric,
                      "Symmetrize the leading NxN block of the truth");
  synth_cmd->add_option("--rank", synth.rank, "Project the truth to this rank");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--out", synth.out, "Dataset CSV path")->required();
  synth_cmd->add_option("--truth", synth.truth_path, "Truth model JSON path")
      ->required();

  detail::FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a coupling model to a dataset");
  fit_cmd->add_option("--data", fit_args.data, "Training dataset CSV")->required();
  fit_cmd->add_option("--method", fit_args.method,
                      "naive | symmetric | lowrank | two-stage")
      ->required();
  fit_cmd->add_option("--rank", fit_args.rank, "Rank for the lowrank method");
  fit_cmd->add_option("--out", fit_args.out, "Fitted model JSON path")->required();
  fit_cmd->add_option("--report", fit_args.report, "Fit report JSON path");
  fit_args.solver.attach(fit_cmd);

  detail::PredictArgs predict_args;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Predict temperatures for new inputs");
  predict_cmd->add_option("--model", predict_args.model, "Model JSON")->required();
  predict_cmd->add_option("--inputs", predict_args.inputs, "Excitation CSV")
      ->required();
  predict_cmd->add_option("--out", predict_args.out, "Prediction CSV path")
      ->required();
  predict_cmd->add_option("--plot", predict_args.plot, "Optional SVG plot path");

  detail::ValidateArgs validate_args;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Score a model against a reference dataset");
  validate_cmd->add_option("--model", validate_args.model, "Model JSON")->required();
  validate_cmd->add_option("--data", validate_args.data, "Reference dataset CSV")
      ->required();
  validate_cmd->add_option("--report", validate_args.report, "Report JSON path");
  validate_cmd->add_option("--plot", validate_args.plot, "Optional SVG plot path");
  validate_cmd->add_option("--threshold", validate_args.threshold,
                           "Per-monitor MPE pass bar, percent");

  detail::RankArgs rank_args;
  CLI::App* rank_cmd =
      app.add_subcommand("rank", "Suggest ranks from a model's singular values");
  rank_cmd->add_option("--model", rank_args.model, "Model JSON")->required();
  rank_cmd->add_option("--tau", rank_args.tau, "Captured-fraction threshold");

  detail::BenchArgs bench_args;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time the fit methods on synthetic systems");
  bench_cmd->add_option("--sizes", bench_args.sizes, "Comma list: N or MxN tokens");
  bench_cmd->add_option("--methods", bench_args.methods, "Comma list of methods");
  bench_cmd->add_option("--repeats", bench_args.repeats, "Repeats per cell (median)");
  bench_cmd->add_option("--rank", bench_args.rank, "Rank for the lowrank method");
  bench_cmd->add_option("--duration", bench_args.duration, "Profile duration, s");
  bench_cmd->add_option("--dt", bench_args.dt, "Sample interval, s");
  bench_cmd->add_option("--segments", bench_args.segments, "Segments per source");
  bench_cmd->add_option("--seed", bench_args.seed, "Generator seed");
  bench_cmd->add_option("--out", bench_args.out, "Benchmark CSV path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lplsp");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return detail::run_synth(synth, verbose);
    if (fit_cmd->parsed()) return detail::run_fit(fit_args, verbose);
    if (predict_cmd->parsed()) return detail::run_predict(predict_args, verbose);
    if (validate_cmd->parsed()) return detail::run_validate(validate_args, verbose);
    if (rank_cmd->parsed()) return detail::run_rank(rank_args, verbose);
    if (bench_cmd->parsed()) return detail::run_bench(bench_args, verbose);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const detail::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitSolverStalled;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataInvalid;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataInvalid;
  } catch (const ParameterError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataInvalid;
  } catch (const MetricError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataInvalid;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace lplsp::cli
