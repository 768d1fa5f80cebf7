#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fkpf/errors.hpp"
#include "fkpf/rng.hpp"

namespace fkpf {

/// Target position in the unit square.
struct StateVec {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const StateVec&, const StateVec&) = default;
};

inline StateVec operator+(StateVec a, StateVec b) { return {a.x + b.x, a.y + b.y}; }
inline StateVec operator-(StateVec a, StateVec b) { return {a.x - b.x, a.y - b.y}; }
inline StateVec operator*(double s, StateVec a) { return {s * a.x, s * a.y}; }

inline double squared_norm(StateVec v) { return v.x * v.x + v.y * v.y; }
inline double distance(StateVec a, StateVec b) { return std::sqrt(squared_norm(a - b)); }
inline bool is_finite(StateVec v) { return std::isfinite(v.x) && std::isfinite(v.y); }

struct Particle {
  StateVec state;
  double weight = 0.0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

/// Weighted empirical measure sum_k w_k delta_{x_k}.
class ParticleSet {
 public:
  static constexpr double kNormTolerance = 1e-9;

  ParticleSet() = default;
  explicit ParticleSet(std::vector<Particle> particles);

  /// Equally weighted set (1/n each).
  static ParticleSet uniform(std::span<const StateVec> states);

  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }

  const Particle& operator[](std::size_t k) const { return particles_[k]; }
  Particle& operator[](std::size_t k) { return particles_[k]; }

  std::span<const Particle> particles() const { return particles_; }
  std::span<Particle> particles() { return particles_; }

  auto begin() const { return particles_.begin(); }
  auto end() const { return particles_.end(); }

  double total_weight() const;
  bool is_normalized(double tol = kNormTolerance) const;
  std::vector<double> weights() const;

  /// Weighted mean position (the posterior-mean estimate for a filter).
  StateVec mean() const;

  friend bool operator==(const ParticleSet&, const ParticleSet&) = default;

 private:
  std::vector<Particle> particles_;
};

/// Test function together with an upper bound on its oscillation
/// sup|h(a) - h(b)|.
struct TestFunction {
  std::function<double(const StateVec&)> eval;
  double osc_bound = 1.0;

  double operator()(const StateVec& s) const { return eval(s); }
};

using Sampler = std::function<StateVec(Rng&)>;

/// n i.i.d. draws from `source`, each with weight 1/n.
ParticleSet sample_empirical(const Sampler& source, std::size_t n, RngStream stream);

/// sum_k w_k h(x_k). Throws InvalidState on an unnormalized set.
double apply_measure(const ParticleSet& set, const TestFunction& h);

/// Rescales weights to sum to one. Throws DegenerateWeights when no
/// weight is strictly positive.
ParticleSet normalize_weights(ParticleSet set);

}  // namespace fkpf
