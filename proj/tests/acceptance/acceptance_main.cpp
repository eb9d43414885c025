// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerance and runtime bound in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "lplsp/dataio.hpp"
#include "lplsp/lplsp.hpp"

using namespace lplsp;

namespace {

struct CriterionResult {
  int id = 0;
  std::string label;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Accepted-cost traces from every fit the suite runs; criterion 8 checks
// each one for monotonicity.
std::vector<std::pair<std::string, std::vector<double>>> g_cost_traces;

void record_costs(const std::string& label, const FitReport& report) {
  for (size_t s = 0; s < report.solver.size(); ++s) {
    g_cost_traces.emplace_back(label + "/stage" + std::to_string(s + 1),
                               report.solver[s].accepted_costs);
  }
}

CriterionResult run_criterion(int id, const std::string& label,
                              const std::function<std::string()>& body) {
  CriterionResult result;
  result.id = id;
  result.label = label;
  const auto start = std::chrono::steady_clock::now();
  try {
    result.detail = body();
    result.pass = true;
  } catch (const std::exception& e) {
    result.detail = e.what();
    result.pass = false;
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(3);
  out << value;
  return out.str();
}

// Shared inverter-shaped fixture for criteria 4 and 6: symmetric source
// block, rank-3 structure, 1 percent rise noise on the training data.
struct InverterFixture {
  CouplingModel truth;
  TransientDataset training;

  static InverterFixture make() {
    CouplingModel truth = generate_correlated_truth(8, 6, 3, 3000);
    ProfileSpec profile;
    profile.duration = 600.0;
    profile.sample_interval = 2.0;
    profile.segment_count = 10;
    profile.amplitude_min = 0.0;
    profile.amplitude_max = 2.0;
    profile.seed = 3000;
    auto [grid, powers] = generate_excitation(profile, 6);
    TransientDataset training =
        synthesize_dataset(truth, powers, grid, 0.01, 3000);
    return {std::move(truth), std::move(training)};
  }

  std::pair<TimeGrid, ExcitationSeries> held_out_excitation() const {
    ProfileSpec profile;
    profile.duration = 600.0;
    profile.sample_interval = 2.0;
    profile.segment_count = 10;
    profile.amplitude_min = 0.0;
    profile.amplitude_max = 2.0;
    profile.seed = 77;
    return generate_excitation(profile, 6);
  }
};

// --- criterion bodies --------------------------------------------------------

std::string criterion_1() {
  // Closed-form oracle: T0 + R dP (1 - exp(-K (t - t0))) for a single step.
  const Index t_len = 801;
  const TimeGrid grid = TimeGrid::uniform(t_len, 0.25);
  Matrix p = Matrix::Zero(1, t_len);
  p.row(0).tail(t_len - 1).setConstant(1.5);
  const ExcitationSeries powers{std::move(p)};
  Eigen::RowVectorXd r_row(1), k_row(1);
  r_row << 2.2;
  k_row << 0.17;
  const Vector naive = forward_naive(powers, grid, r_row, k_row, 20.0);
  const Vector fast = forward_vectorized(powers, grid, r_row, k_row, 20.0);

  double worst = 0.0;
  for (Index m = 0; m < t_len; ++m) {
    const double oracle =
        m == 0 ? 20.0 : 20.0 + 2.2 * 1.5 * (1.0 - std::exp(-0.17 * grid(m)));
    worst = std::max(worst, std::abs(naive(m) - oracle));
    worst = std::max(worst, std::abs(fast(m) - oracle));
  }
  require(worst <= 1e-10, "closed-form deviation " + fmt(worst));

  // Frozen spot value: R=2, K=0.5, unit step at k=1 on t=0..4.
  const TimeGrid small = TimeGrid::uniform(5, 1.0);
  Matrix ps = Matrix::Zero(1, 5);
  ps.row(0).tail(4).setConstant(1.0);
  Eigen::RowVectorXd r1(1), k1(1);
  r1 << 2.0;
  k1 << 0.5;
  const Vector spot = forward_naive(ExcitationSeries{ps}, small, r1, k1, 20.0);
  require(std::abs(spot(4) - 21.729329433526775) <= 1e-10,
          "frozen spot value mismatch");
  return "max |model - closed form| = " + fmt(worst);
}

std::string criterion_2() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SplitMix64 rng(derive_seed(4242, 7, seed));
    const Index sources = 1 + static_cast<Index>(rng.next() % 4);
    const Index t_len = 2 + static_cast<Index>(rng.next() % 199);
    Vector t(t_len);
    t(0) = rng.uniform(0.0, 1.0);
    for (Index k = 1; k < t_len; ++k) t(k) = t(k - 1) + rng.uniform(0.05, 2.0);
    const TimeGrid grid(std::move(t));
    Matrix p = Matrix::Zero(sources, t_len);
    for (Index j = 0; j < sources; ++j) {
      Index k = 1;
      while (k < t_len) {
        const double level = rng.uniform(0.0, 2.0);
        const Index run = 1 + static_cast<Index>(rng.next() % 23);
        for (Index m = k; m < std::min(k + run, t_len); ++m) p(j, m) = level;
        k += run;
      }
    }
    const ExcitationSeries powers{std::move(p)};
    Eigen::RowVectorXd r_row(sources), k_row(sources);
    for (Index j = 0; j < sources; ++j) {
      r_row(j) = rng.uniform(0.1, 5.0);
      k_row(j) = rng.uniform(0.01, 1.0);
    }
    const Vector naive = forward_naive(powers, grid, r_row, k_row, 20.0);
    const Vector fast = forward_vectorized(powers, grid, r_row, k_row, 20.0);
    worst = std::max(worst, (naive - fast).lpNorm<Eigen::Infinity>());
  }
  require(worst <= 1e-10, "max |naive - vectorized| = " + fmt(worst));
  return "max |naive - vectorized| = " + fmt(worst) + " over 100 instances";
}

std::string criterion_3() {
  Matrix r(2, 2), k(2, 2);
  r << 2.0, 0.5,
       0.5, 1.5;
  k << 0.30, 0.07,
       0.12, 0.45;
  const CouplingModel truth(r, k, 20.0);

  ProfileSpec profile;
  profile.duration = 240.0;
  profile.sample_interval = 2.0;
  profile.segment_count = 8;  // >= 6 level changes per source
  profile.amplitude_min = 0.0;
  profile.amplitude_max = 2.0;
  profile.seed = 42;
  auto [grid, powers] = generate_excitation(profile, 2);
  const TransientDataset dataset = synthesize_dataset(truth, powers, grid);

  const FitReport report = fit(dataset, Parameterization::full());
  record_costs("c3/full", report);
  const double worst_r =
      ((report.model.R() - truth.R()).cwiseAbs().array() /
       truth.R().array()).maxCoeff();
  const double worst_k =
      ((report.model.K() - truth.K()).cwiseAbs().array() /
       truth.K().array()).maxCoeff();
  require(worst_r <= 1e-3, "R recovery error " + fmt(worst_r));
  require(worst_k <= 1e-3, "K recovery error " + fmt(worst_k));
  return "max relative entry error: R " + fmt(worst_r) + ", K " + fmt(worst_k);
}

// Runs both criterion-4 fits once and parks them for criterion 6.
std::string criterion_4(const InverterFixture& fixture,
                        std::vector<FitReport>& storage, bool& fits_valid) {
  FitReport lowrank = fit(fixture.training, Parameterization::low_rank(3));
  record_costs("c4/lowrank3", lowrank);
  FitReport two_stage = fit_two_stage(fixture.training);
  record_costs("c4/two-stage", two_stage);

  auto [grid, powers] = fixture.held_out_excitation();
  const TemperatureSeries reference = predict(fixture.truth, powers, grid);
  const double worst_lr =
      mean_percentage_error(predict(lowrank.model, powers, grid), reference)
          .per_monitor.maxCoeff();
  const double worst_ts =
      mean_percentage_error(predict(two_stage.model, powers, grid), reference)
          .per_monitor.maxCoeff();

  storage.clear();
  storage.emplace_back(std::move(lowrank));
  storage.emplace_back(std::move(two_stage));
  fits_valid = true;

  require(worst_lr <= 5.0,
          "lowrank(3) held-out MPE " + fmt(worst_lr) + "% > 5%");
  require(worst_ts <= 5.0,
          "two-stage held-out MPE " + fmt(worst_ts) + "% > 5%");
  return "held-out MPE: lowrank(3) " + fmt(worst_lr) + "%, two-stage " +
         fmt(worst_ts) + "%";
}

std::string criterion_5() {
  require(param_count(Parameterization::full(), 6, 6) == 72, "full 6x6 != 72");
  require(param_count(Parameterization::symmetric(), 6, 6) == 42,
          "symmetric N=6 != 42");
  require(param_count(Parameterization::full(), 8, 6) == 96, "full 8x6 != 96");
  require(param_count(Parameterization::low_rank(2), 8, 6) == 2 * 28,
          "lowrank(2) != 28 per matrix");
  const Index lr3 = param_count(Parameterization::low_rank(3), 8, 6);
  require(lr3 == 2 * 42, "lowrank(3) != 42 per matrix");
  require(8 * 3 == 24 && 6 * 3 == 18, "lowrank(3) A/B split != 24/18");
  require(param_count(Parameterization::two_stage(), 8, 6) == 66,
          "two-stage 8x6 != 66");
  return "72 / 42 / 96 / 28+28 / 42+42 (A:24, B:18) / 66";
}

std::string criterion_6(const InverterFixture& fixture,
                        const FitReport& lowrank, const FitReport& two_stage,
                        bool fits_valid) {
  require(fits_valid, "criterion 4 fits unavailable");

  // Symmetric output from a dedicated square fit.
  TruthSpec spec;
  spec.monitor_count = 3;
  spec.source_count = 3;
  spec.symmetric = true;
  spec.seed = 6;
  const CouplingModel truth = generate_truth(spec);
  ProfileSpec profile;
  profile.duration = 200.0;
  profile.sample_interval = 2.0;
  profile.segment_count = 6;
  profile.amplitude_max = 2.0;
  profile.seed = 6;
  auto [grid, powers] = generate_excitation(profile, 3);
  const FitReport symmetric_fit =
      fit(synthesize_dataset(truth, powers, grid), Parameterization::symmetric());
  record_costs("c6/symmetric", symmetric_fit);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      require(symmetric_fit.model.R()(i, j) == symmetric_fit.model.R()(j, i) &&
                  symmetric_fit.model.K()(i, j) == symmetric_fit.model.K()(j, i),
              "symmetric fit output not bitwise symmetric");
    }
  }

  // Two-stage stage-1 block: bitwise symmetric and bitwise equal to the
  // standalone symmetric fit on the co-located rows (stage 2 froze it).
  const TransientDataset block(
      fixture.training.grid(), fixture.training.powers(),
      TemperatureSeries(fixture.training.temperatures().values().topRows(6)),
      fixture.training.t0(), 6);
  const FitReport standalone = fit(block, Parameterization::symmetric());
  record_costs("c6/standalone-symmetric", standalone);
  require((two_stage.model.R().topRows(6).array() ==
           standalone.model.R().array()).all() &&
              (two_stage.model.K().topRows(6).array() ==
               standalone.model.K().array()).all(),
          "stage-1 block altered by stage 2");
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 6; ++j) {
      require(two_stage.model.R()(i, j) == two_stage.model.R()(j, i),
              "two-stage source block not bitwise symmetric");
    }
  }

  // Low-rank structure of the criterion-4 model.
  const Eigen::JacobiSVD<Matrix> svd_r(lowrank.model.R());
  const Eigen::JacobiSVD<Matrix> svd_k(lowrank.model.K());
  const double ratio_r = svd_r.singularValues()(3) / svd_r.singularValues()(0);
  const double ratio_k = svd_k.singularValues()(3) / svd_k.singularValues()(0);
  require(ratio_r <= 1e-10, "sigma_4/sigma_1 of R = " + fmt(ratio_r));
  require(ratio_k <= 1e-10, "sigma_4/sigma_1 of K = " + fmt(ratio_k));
  return "bitwise symmetry, frozen stage-1 block, sigma_4/sigma_1 <= " +
         fmt(std::max(ratio_r, ratio_k));
}

std::string criterion_7() {
  SplitMix64 rng(derive_seed(7777, 3, 0));
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = 1 + static_cast<Index>(rng.next() % 10);
    Vector sigma(n);
    for (Index i = 0; i < n; ++i) sigma(i) = rng.uniform(0.0, 10.0);
    std::sort(sigma.data(), sigma.data() + n, std::greater<double>());
    if (sigma(0) == 0.0) sigma(0) = 1.0;
    const double tau_lo = rng.uniform(0.01, 1.0);
    const double tau_hi = rng.uniform(tau_lo, 1.0);

    const double total = sigma.sum();
    double cumulative = 0.0;
    int brute = static_cast<int>(n);
    for (Index k = 0; k < n; ++k) {
      cumulative += sigma(k);
      if (cumulative / total >= tau_lo) {
        brute = static_cast<int>(k + 1);
        break;
      }
    }
    require(select_rank(sigma, tau_lo) == brute, "brute-force mismatch");
    require(select_rank(sigma, tau_lo) <= select_rank(sigma, tau_hi),
            "not monotone in tau");
  }
  return "1000 spectra match the cumulative oracle; monotone in tau";
}

std::string criterion_8() {
  // Linear fixture against the normal-equations oracle.
  Matrix a(3, 2);
  a << 1, 0,
       0, 1,
       1, 1;
  Vector b(3);
  b << 1, 2, 3;
  ResidualFunction linear;
  linear.arity = 2;
  linear.residual_dim = 3;
  linear.eval = [&](const Vector& theta) { return Vector(a * theta - b); };
  const Vector oracle = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  const SolverResult lin = minimize(linear, Vector::Zero(2));
  require((lin.theta_star - oracle).lpNorm<Eigen::Infinity>() <= 1e-8,
          "linear fixture off the least-squares solution");

  ResidualFunction rosenbrock;
  rosenbrock.arity = 2;
  rosenbrock.residual_dim = 2;
  rosenbrock.eval = [](const Vector& theta) {
    Vector r(2);
    r << 1.0 - theta(0), 10.0 * (theta(1) - theta(0) * theta(0));
    return r;
  };
  Vector start(2);
  start << -1.2, 1.0;
  const SolverResult rb = minimize(rosenbrock, start);
  require(std::abs(rb.theta_star(0) - 1.0) <= 1e-6 &&
              std::abs(rb.theta_star(1) - 1.0) <= 1e-6,
          "Rosenbrock fixture did not reach (1, 1)");
  require(rb.converged(), "Rosenbrock fixture did not converge");

  size_t checked = 0;
  for (const auto& [label, costs] : g_cost_traces) {
    for (size_t i = 1; i < costs.size(); ++i) {
      require(costs[i] <= costs[i - 1],
              "accepted costs increased in " + label);
    }
    ++checked;
  }
  require(checked >= 6, "too few recorded fits: " + std::to_string(checked));
  return "fixtures converged; " + std::to_string(checked) +
         " accepted-cost traces non-increasing";
}

std::string criterion_9() {
  const auto median_time = [](const TransientDataset& dataset,
                              const Parameterization& variant, int repeats) {
    std::vector<double> times;
    for (int rep = 0; rep < repeats; ++rep) {
      const FitReport report = fit_any(dataset, variant);
      record_costs("c9/" + variant.name(), report);
      times.push_back(report.elapsed_s);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };

  // Noiseless, correlated, exactly realizable benchmark systems: every
  // method optimizes its own representation of the same truth down to the
  // solver tolerances, so the medians compare method cost rather than
  // noise-floor crawling or basin luck.
  const CouplingModel rect_truth = generate_correlated_truth(8, 6, 3, 3000);
  ProfileSpec profile;
  profile.duration = 600.0;
  profile.sample_interval = 2.0;
  profile.segment_count = 10;
  profile.amplitude_max = 2.0;
  profile.seed = 3000;
  auto [rect_grid, rect_powers] = generate_excitation(profile, 6);
  const TransientDataset rect_data =
      synthesize_dataset(rect_truth, rect_powers, rect_grid);

  const double t_two_stage =
      median_time(rect_data, Parameterization::two_stage(), 3);
  const double t_lowrank =
      median_time(rect_data, Parameterization::low_rank(3), 3);
  const double t_naive = median_time(rect_data, Parameterization::full(), 3);

  // Square N=6 benchmark.
  const CouplingModel square_truth = generate_correlated_truth(6, 6, 3, 3002);
  profile.seed = 3002;
  auto [square_grid, square_powers] = generate_excitation(profile, 6);
  const TransientDataset square_data =
      synthesize_dataset(square_truth, square_powers, square_grid);

  const double t_symmetric =
      median_time(square_data, Parameterization::symmetric(), 3);
  const double t_naive6 = median_time(square_data, Parameterization::full(), 3);

  require(2.0 * t_two_stage <= t_lowrank,
          "two-stage (" + fmt(t_two_stage) + " s) not 2x below lowrank(3) (" +
              fmt(t_lowrank) + " s)");
  require(2.0 * t_lowrank <= t_naive,
          "lowrank(3) (" + fmt(t_lowrank) + " s) not 2x below naive (" +
              fmt(t_naive) + " s)");
  require(2.0 * t_symmetric <= t_naive6,
          "symmetric (" + fmt(t_symmetric) + " s) not 2x below naive (" +
              fmt(t_naive6) + " s)");
  return "medians: two-stage " + fmt(t_two_stage) + " s < lowrank(3) " +
         fmt(t_lowrank) + " s < naive " + fmt(t_naive) + " s; symmetric " +
         fmt(t_symmetric) + " s < naive " + fmt(t_naive6) + " s";
}

std::string criterion_10() {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "lplsp_acceptance_roundtrip";
  fs::create_directories(dir);

  int checked = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SplitMix64 rng(derive_seed(1010, 4, seed));
    const Index sources = 1 + static_cast<Index>(rng.next() % 5);
    const Index monitors = 1 + static_cast<Index>(rng.next() % 5);
    const Index t_len = 2 + static_cast<Index>(rng.next() % 60);

    Vector t(t_len);
    t(0) = rng.uniform(0.0, 1.0);
    for (Index k = 1; k < t_len; ++k) t(k) = t(k - 1) + rng.uniform(0.05, 3.0);
    Matrix p = Matrix::Zero(sources, t_len);
    for (Index j = 0; j < sources; ++j) {
      for (Index m = 1; m < t_len; ++m) p(j, m) = rng.uniform(0.0, 4.0);
    }
    Matrix temps(monitors, t_len);
    for (Index i = 0; i < monitors; ++i) {
      for (Index m = 0; m < t_len; ++m) temps(i, m) = rng.uniform(10.0, 90.0);
    }
    const TransientDataset dataset(
        TimeGrid(std::move(t)), ExcitationSeries(std::move(p)),
        TemperatureSeries(std::move(temps)), rng.uniform(5.0, 35.0),
        static_cast<Index>(rng.next() %
                           static_cast<std::uint64_t>(
                               std::min(monitors, sources) + 1)));
    const std::string data_path =
        (dir / ("d" + std::to_string(seed) + ".csv")).string();
    write_dataset(dataset, data_path);
    const TransientDataset loaded = read_dataset(data_path);
    require((loaded.grid().values().array() ==
             dataset.grid().values().array()).all() &&
                (loaded.powers().values().array() ==
                 dataset.powers().values().array()).all() &&
                (loaded.temperatures().values().array() ==
                 dataset.temperatures().values().array()).all() &&
                loaded.t0() == dataset.t0() &&
                loaded.colocated_count() == dataset.colocated_count(),
            "dataset round trip not bitwise at seed " + std::to_string(seed));

    FitProvenance prov;
    prov.variant = seed % 2 == 0 ? "lowrank" : "full";
    if (seed % 2 == 0) prov.rank = 1 + static_cast<int>(seed % 3);
    prov.colocated_count = dataset.colocated_count();
    prov.residual_norm = rng.uniform(0.0, 1.0);
    Matrix r(monitors, sources), k(monitors, sources);
    for (Index i = 0; i < monitors; ++i) {
      for (Index j = 0; j < sources; ++j) {
        r(i, j) = rng.uniform(1e-11, 10.0);
        k(i, j) = rng.uniform(1e-4, 1.0);
      }
    }
    const CouplingModel model(r, k, rng.uniform(-10.0, 40.0), prov);
    const std::string model_path =
        (dir / ("m" + std::to_string(seed) + ".json")).string();
    save_model(model, model_path);
    const CouplingModel loaded_model = load_model(model_path);
    require((loaded_model.R().array() == model.R().array()).all() &&
                (loaded_model.K().array() == model.K().array()).all() &&
                loaded_model.t0() == model.t0(),
            "model round trip not bitwise at seed " + std::to_string(seed));
    ++checked;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return std::to_string(checked) + " dataset+model fixtures bitwise";
}

}  // namespace

int main() {
  std::vector<CriterionResult> results;

  results.push_back(run_criterion(
      1, "single-step closed form within 1e-10", criterion_1));
  results.push_back(run_criterion(
      2, "naive/vectorized equivalence within 1e-10", criterion_2));
  results.push_back(run_criterion(
      3, "two-body full-fit recovery within 0.1%", criterion_3));

  InverterFixture fixture = InverterFixture::make();
  std::vector<FitReport> fixture_fits;
  bool fits_valid = false;
  results.push_back(run_criterion(
      4, "inverter-shaped held-out MPE <= 5% (lowrank(3), two-stage)",
      [&] { return criterion_4(fixture, fixture_fits, fits_valid); }));

  results.push_back(run_criterion(
      5, "parameter counts for the structured variants", criterion_5));
  results.push_back(run_criterion(
      6, "structural guarantees (symmetry, freezing, low rank)", [&] {
        require(fits_valid, "criterion 4 fits unavailable");
        return criterion_6(fixture, fixture_fits[0], fixture_fits[1],
                           fits_valid);
      }));
  results.push_back(run_criterion(
      7, "select_rank matches the brute-force oracle", criterion_7));
  results.push_back(run_criterion(
      9, "timing orderings with 2x separation", criterion_9));
  results.push_back(run_criterion(
      10, "bitwise save/load round trips on 50 fixtures", criterion_10));
  // Criterion 8 last: it audits the accepted-cost traces of every fit above.
  results.push_back(run_criterion(
      8, "solver fixtures and accepted-cost monotonicity", criterion_8));

  std::sort(results.begin(), results.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.id < b.id;
            });

  // Runtime bounds are part of the criteria.
  const auto runtime_bound = [&](int id, double bound) {
    for (CriterionResult& r : results) {
      if (r.id == id && r.seconds > bound) {
        r.pass = false;
        r.detail += " [runtime " + fmt(r.seconds) + " s > " + fmt(bound) + " s]";
      }
    }
  };
  runtime_bound(1, 1.0);
  runtime_bound(2, 5.0);
  runtime_bound(3, 10.0);
  runtime_bound(4, 120.0);
  runtime_bound(7, 1.0);

  int failures = 0;
  for (const CriterionResult& r : results) {
    if (!r.pass) ++failures;
    std::printf("[%s] criterion %2d: %s - %s (%.2f s)\n",
                r.pass ? "PASS" : "FAIL", r.id, r.label.c_str(),
                r.detail.c_str(), r.seconds);
  }
  std::printf("acceptance: %d/%d criteria passed\n",
              static_cast<int>(results.size()) - failures,
              static_cast<int>(results.size()));
  return failures == 0 ? 0 : 1;
}
