#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fkpf/core.hpp"
#include "fkpf/gaussian.hpp"
#include "fkpf/kernels.hpp"

namespace fkpf {

struct MixtureEntry {
  double weight = 1.0;
  GaussianComponent component;

  friend bool operator==(const MixtureEntry&, const MixtureEntry&) = default;
};

/// Convex combination of axis-aligned Gaussians.
struct MixtureModel {
  std::vector<MixtureEntry> entries;

  std::size_t size() const { return entries.size(); }
  void validate() const;

  friend bool operator==(const MixtureModel&, const MixtureModel&) = default;
};

enum class InitStrategy {
  /// Candidate means on a stride through the samples plus the sample
  /// mean; variances from nearest-neighbour moments around each mean.
  sample_moments,
  /// Candidate means at the samples the current mixture explains worst;
  /// variance fixed at the sample variance over N_p.
  k_candidate_points,
};

struct GmlConfig {
  std::size_t N_p = 4;
  std::vector<double> alpha_grid = default_alpha_grid();
  InitStrategy init_strategy = InitStrategy::sample_moments;
  int local_steps = 10;
  /// EM passes over the whole mixture after each insertion (0 disables).
  /// Variances stay clamped, so every pass is monotone in likelihood.
  int em_steps = 10;
  double var_floor = 1e-4;
  double var_ceiling = 1.0;
  std::size_t max_candidates = 24;
  /// Also try alpha = 2/(k+1) when adding the k-th component.
  bool li_barron_alpha = true;
  Exec exec = Exec::parallel;

  void validate() const;
  static std::vector<double> default_alpha_grid();
};

double mixture_logpdf(const MixtureModel& model, const StateVec& x);

/// Sum of log mixture densities over the samples.
double sample_loglik(const MixtureModel& model, std::span<const StateVec> samples);

struct TwoComponentResult {
  GaussianComponent theta;
  double alpha = 0.0;
  double loglik = 0.0;
  /// Log-likelihood of the unchanged mixture (alpha = 0).
  double baseline_loglik = 0.0;
};

/// One greedy step: maximizes sum_j log((1-a) g(x_j) + a phi(x_j)) over
/// a candidate search followed by coordinate refinement. Returns alpha = 0
/// when nothing beats the current mixture.
TwoComponentResult two_component_step(const MixtureModel& current,
                                      std::span<const StateVec> samples, const GmlConfig& config);

/// Mixture with (1 - alpha) scaling on the old weights and `theta` added
/// with weight alpha.
MixtureModel add_component(const MixtureModel& current, const GaussianComponent& theta,
                           double alpha);

/// Single Gaussian matching the sample mean and (clamped) variances.
MixtureModel moment_match(std::span<const StateVec> samples, const GmlConfig& config);

struct GmlTrace {
  MixtureModel model;
  /// Sample log-likelihood after each component count 1..N_p.
  std::vector<double> loglik;
};

/// Clamped-variance EM passes; returns the input when no pass improves it.
MixtureModel em_polish(const MixtureModel& model, std::span<const StateVec> samples,
                       const GmlConfig& config);

GmlTrace gml_fit_traced(std::span<const StateVec> samples, const GmlConfig& config);
MixtureModel gml_fit(std::span<const StateVec> samples, const GmlConfig& config);

ParticleSet sample_mixture(const MixtureModel& model, std::size_t n, Rng& rng);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

using LogDensity = std::function<double(const StateVec&)>;

/// D(f || g) estimated as the mean of log f - log g over draws from f.
McEstimate kl_divergence_mc(const LogDensity& f_logpdf, const Sampler& f_sampler,
                            const MixtureModel& g, std::size_t n, Rng& rng);

/// ||f - g||_1 estimated as the mean of |1 - g/f| over draws from f.
McEstimate l1_distance_mc(const LogDensity& f_logpdf, const Sampler& f_sampler,
                          const MixtureModel& g, std::size_t n, Rng& rng);

struct DensityBounds {
  double inf = 0.0;  // a_u; may underflow to 0 for narrow components
  double sup = 0.0;  // b_u
  double log_inf = 0.0;
  double log_sup = 0.0;
};

/// Infimum and supremum over [0,1]^2 across the model's components.
DensityBounds density_bounds(const MixtureModel& model);

nlohmann::json to_json(const MixtureModel& model);
MixtureModel mixture_from_json(const nlohmann::json& doc);

}  // namespace fkpf
