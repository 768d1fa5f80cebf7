#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fkpf/core.hpp"
#include "fkpf/gml.hpp"
#include "fkpf/leader.hpp"
#include "fkpf/models.hpp"

namespace fkpf {

enum class RunMode { fixed_leader, subsample, parametric, none, centralized };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

/// Settings of a Monte Carlo tracking experiment. JSON field names match
/// the member names.
struct ExperimentConfig {
  std::size_t N = 300;
  std::size_t N_b = 300;
  std::size_t N_p = 24;
  double lambda = 0.2;
  int K_l = 20;
  int K_s = 200;
  double r0 = 0.02;
  double noise_amp = 0.005;
  double p_d = 0.9;
  double p_f = 0.05;
  /// Detection radius; half the connectivity radius when unset.
  std::optional<double> r_d;
  int T = 100;
  std::size_t trials = 200;
  RunMode mode = RunMode::subsample;
  std::size_t reference_N = 3000;
  std::uint64_t seed = 1;

  GmlConfig gml;
  MiMethod mi_method = MiMethod::per_sensor_sum;
  std::optional<double> candidate_radius;
  /// Reuse this network instead of generating one from `seed`.
  std::optional<NetworkTopology> topology;

  void validate() const;
  DynamicsModel dynamics() const;
  BinarySensorModel sensor_model() const;
  /// The network the experiment runs on (given or generated from seed).
  NetworkTopology network() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// Ground truth of one trial: target path and every satellite's
/// detector output at every step (row 0 is empty).
struct World {
  std::vector<StateVec> truth;
  std::vector<std::vector<std::uint8_t>> observations;
};

/// Seed of trial `index`; every random draw of the trial derives from it.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t index);

World simulate_world(const ExperimentConfig& config, const NetworkTopology& topology,
                     std::uint64_t trial_seed);

/// The filter configuration that distinguishes one tracker from another
/// on a shared world.
struct FilterVariant {
  RunMode mode = RunMode::none;
  std::size_t N = 300;
  std::size_t N_b = 300;
  std::size_t N_p = 24;
  double lambda = 0.2;

  std::string key() const;
};

FilterVariant candidate_variant(const ExperimentConfig& config);
/// Same tracker without approximation at hand-off.
FilterVariant baseline_variant(const ExperimentConfig& config);
FilterVariant reference_variant(const ExperimentConfig& config);

struct FilterRun {
  std::vector<StateVec> estimates;
  std::vector<int> leaders;
  std::vector<HandoffRecord> handoffs;
  bool degenerate = false;
};

/// Runs one tracker over a world. All variants draw from the same
/// filter streams of the trial, so paired runs share their randomness
/// until their particle clouds diverge.
FilterRun run_filter(const FilterVariant& variant, const ExperimentConfig& config,
                     const NetworkTopology& topology, const World& world,
                     std::uint64_t trial_seed, Exec exec = Exec::parallel);

/// Memoizes filter runs by (trial seed, models, variant); optionally
/// persisted as one CSV file per run under `dir`.
class RunCache {
 public:
  RunCache() = default;
  explicit RunCache(std::filesystem::path dir);

  FilterRun get_or_run(const std::string& key, const std::function<FilterRun()>& fn);

 private:
  std::optional<FilterRun> load(const std::string& key);
  void store(const std::string& key, const FilterRun& run);
  std::optional<std::filesystem::path> file_for(const std::string& key) const;

  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, FilterRun> memory_;
};

struct TrialResult {
  std::vector<StateVec> true_states;
  std::vector<StateVec> estimates;
  std::vector<StateVec> reference_estimates;
  std::vector<StateVec> baseline_estimates;
  std::vector<HandoffRecord> handoffs;
  bool degenerate = false;
};

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t trial_seed);
TrialResult run_trial(const ExperimentConfig& config, const NetworkTopology& topology,
                      std::uint64_t trial_seed, RunCache* cache = nullptr,
                      Exec exec = Exec::parallel);

struct BoxStats {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double lower_whisker = 0.0;
  double upper_whisker = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Quartiles by linear interpolation; Tukey whiskers (most extreme
/// observations within 1.5 IQR of the quartiles).
BoxStats box_stats(std::vector<double> values);

struct TrialHandoff {
  std::size_t trial = 0;
  HandoffRecord record;
};

struct AggregateMetrics {
  RunMode mode = RunMode::none;
  std::vector<double> rmse;
  std::vector<double> rmsae;
  /// Per completed trial; RMSAE over time of the candidate divided by that
  /// of the paired baseline run.
  std::vector<double> deterioration_ratio;
  /// Final-quarter RMSE per completed trial.
  std::vector<double> final_rmse;
  std::vector<std::size_t> trial_index;
  BoxStats deterioration;
  double empirical_q = 0.0;
  std::optional<double> compression_factor;
  std::optional<double> chi;
  std::vector<TrialHandoff> handoffs;
  std::size_t excluded_trials = 0;
  BinarySensorModel sensor;
  std::size_t N = 0;
  std::size_t N_b = 0;
};

struct MonteCarloOptions {
  RunCache* cache = nullptr;
  /// Worker threads for the trial loop; 0 keeps the OpenMP default.
  int threads = 0;
};

AggregateMetrics run_monte_carlo(const ExperimentConfig& config,
                                 const MonteCarloOptions& options = {});

/// Values regular filtering handles per value sent at hand-off:
/// N/N_b for subsampling, 2N/(5 N_p) for a diagonal Gaussian mixture.
double compression_factor(const ExperimentConfig& config);

/// Root mean square over t in [from, to) of an RMSE curve.
double window_rms(const std::vector<double>& curve, std::size_t from, std::size_t to);

/// A test distribution with a known mean of the test function.
struct TestDistribution {
  std::string name;
  Sampler sampler;
  TestFunction h;
  double mean = 0.0;
};

TestDistribution uniform_distribution();
TestDistribution two_point_distribution();
TestDistribution truncated_gaussian_distribution();
TestDistribution point_mass_distribution();
TestDistribution rademacher_distribution();

struct Lemma1Check {
  double empirical = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Compares E|[P - S^N(P)](h)|^p)^{1/p} over `reps` repetitions with
/// c(p)^{1/p} osc(h) / sqrt(N); passes within a 3/sqrt(reps) allowance.
Lemma1Check verify_lemma1(const TestDistribution& dist, std::size_t N, double p, std::size_t reps,
                          RngStream stream);

struct MgfRow {
  double epsilon = 0.0;
  double empirical = 0.0;
  double exact_bound = 0.0;
  double simple_bound = 0.0;
  bool pass = false;
};

std::vector<MgfRow> verify_mgf(const TestDistribution& dist, std::size_t N,
                               const std::vector<double>& epsilon_grid, std::size_t reps,
                               RngStream stream);

/// Writes rmse.csv, rmsae.csv, handoffs.csv, deterioration.csv and
/// bound_overlay.csv into `dir`.
void emit_results(const AggregateMetrics& metrics, const std::filesystem::path& dir);

/// Decimal text that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace fkpf
