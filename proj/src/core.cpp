#include "fkpf/core.hpp"

#include <string>

namespace fkpf {

ParticleSet::ParticleSet(std::vector<Particle> particles) : particles_(std::move(particles)) {
  for (const auto& p : particles_) {
    if (!std::isfinite(p.weight) || p.weight < 0.0) {
      throw InvalidArgument("particle weight must be finite and non-negative, got " +
                            std::to_string(p.weight));
    }
    if (!is_finite(p.state)) throw InvalidArgument("particle state must be finite");
  }
}

ParticleSet ParticleSet::uniform(std::span<const StateVec> states) {
  std::vector<Particle> out;
  out.reserve(states.size());
  const double w = states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size());
  for (const auto& s : states) out.push_back({s, w});
  return ParticleSet(std::move(out));
}

double ParticleSet::total_weight() const {
  double sum = 0.0;
  for (const auto& p : particles_) sum += p.weight;
  return sum;
}

bool ParticleSet::is_normalized(double tol) const {
  return !particles_.empty() && std::abs(total_weight() - 1.0) <= tol;
}

std::vector<double> ParticleSet::weights() const {
  std::vector<double> w;
  w.reserve(particles_.size());
  for (const auto& p : particles_) w.push_back(p.weight);
  return w;
}

StateVec ParticleSet::mean() const {
  StateVec m;
  double total = 0.0;
  for (const auto& p : particles_) {
    m.x += p.weight * p.state.x;
    m.y += p.weight * p.state.y;
    total += p.weight;
  }
  if (total <= 0.0) throw DegenerateWeights("mean of a set with zero total weight");
  return {m.x / total, m.y / total};
}

ParticleSet sample_empirical(const Sampler& source, std::size_t n, RngStream stream) {
  if (n == 0) throw InvalidArgument("sample_empirical: n must be at least 1");
  Rng rng(stream);
  std::vector<StateVec> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) draws.push_back(source(rng));
  return ParticleSet::uniform(draws);
}

double apply_measure(const ParticleSet& set, const TestFunction& h) {
  if (!set.is_normalized()) throw InvalidState("apply_measure: particle set is not normalized");
  double acc = 0.0;
  for (const auto& p : set) acc += p.weight * h(p.state);
  return acc;
}

ParticleSet normalize_weights(ParticleSet set) {
  const double total = set.total_weight();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateWeights("normalize_weights: no strictly positive weight");
  }
  for (auto& p : set.particles()) p.weight /= total;
  return set;
}

}  // namespace fkpf
