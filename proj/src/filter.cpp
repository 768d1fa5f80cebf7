#include "fkpf/filter.hpp"

#include <algorithm>
#include <cmath>

namespace fkpf {

namespace {

void require_normalized(const ParticleSet& set, const char* who) {
  if (!set.is_normalized()) throw InvalidState(std::string(who) + ": particle set is not normalized");
}

ParticleSet reweight(ParticleSet set, std::span<const double> g) {
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (!(g[k] >= 0.0) || !std::isfinite(g[k])) {
      throw InvalidArgument("update: potential must be finite and non-negative");
    }
    set[k].weight *= g[k];
  }
  return normalize_weights(std::move(set));
}

ParticleSet expand(const ParticleSet& set, std::span<const std::size_t> counts, std::size_t n_out) {
  std::vector<Particle> out;
  out.reserve(n_out);
  const double w = 1.0 / static_cast<double>(n_out);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t c = 0; c < counts[k]; ++c) out.push_back({set[k].state, w});
  }
  return ParticleSet(std::move(out));
}

// Adds `draws` categorical samples over `weights` (need not sum to one).
void add_categorical(std::span<const double> weights, std::size_t draws, Rng& rng,
                     std::vector<std::size_t>& counts) {
  if (draws == 0) return;
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    cdf[k] = acc;
  }
  if (!(acc > 0.0)) throw DegenerateWeights("categorical draw over zero total weight");
  for (std::size_t i = 0; i < draws; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto k = static_cast<std::size_t>(it - cdf.begin());
    // u < acc always, but guard against round-off in the last bucket, and
    // never land on a zero-weight entry.
    k = std::min(k, weights.size() - 1);
    while (weights[k] <= 0.0 && k > 0) --k;
    ++counts[k];
  }
}

}  // namespace

ParticleSet predict(ParticleSet set, const DynamicsModel& model, RngStream stream, Exec exec) {
  require_normalized(set, "predict");
  kernels::propagate(set.particles(), model, stream, exec);
  return set;
}

ParticleSet update(ParticleSet set, const PotentialFn& potential) {
  std::vector<double> g(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) g[k] = potential(set[k].state);
  return reweight(std::move(set), g);
}

ParticleSet update(ParticleSet set, const LocalPotential& potential, Exec exec) {
  std::vector<double> g(set.size());
  kernels::evaluate_potential(set.particles(), potential, g, exec);
  return reweight(std::move(set), g);
}

std::vector<std::size_t> residual_counts(std::span<const double> weights, std::size_t n_out,
                                         Rng& rng) {
  const double n = static_cast<double>(n_out);
  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<double> residual(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double expected = n * weights[k];
    const double whole = std::floor(expected);
    counts[k] = static_cast<std::size_t>(whole);
    residual[k] = expected - whole;
    assigned += counts[k];
  }
  // Round-off can push the floors one past n_out when weights sum to
  // slightly more than one; trim from the largest count.
  while (assigned > n_out) {
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  add_categorical(residual, n_out - assigned, rng, counts);
  return counts;
}

std::vector<std::size_t> multinomial_counts(std::span<const double> weights, std::size_t n_out,
                                            Rng& rng) {
  std::vector<std::size_t> counts(weights.size(), 0);
  add_categorical(weights, n_out, rng, counts);
  return counts;
}

ParticleSet residual_resample(const ParticleSet& set, std::size_t n_out, Rng& rng) {
  require_normalized(set, "residual_resample");
  if (n_out == 0) throw InvalidArgument("residual_resample: n_out must be >= 1");
  const auto w = set.weights();
  return expand(set, residual_counts(w, n_out, rng), n_out);
}

ParticleSet multinomial_resample(const ParticleSet& set, std::size_t n_out, Rng& rng) {
  require_normalized(set, "multinomial_resample");
  if (n_out == 0) throw InvalidArgument("multinomial_resample: n_out must be >= 1");
  const auto w = set.weights();
  return expand(set, multinomial_counts(w, n_out, rng), n_out);
}

ParticleSet filter_step(const ParticleSet& set, const DynamicsModel& dynamics,
                        const PotentialFn& potential, std::size_t n, RngStream stream) {
  auto weighted = update(predict(set, dynamics, stream.derive(0), Exec::serial), potential);
  Rng rng(stream.derive(1));
  return residual_resample(weighted, n, rng);
}

ParticleSet filter_step(const ParticleSet& set, const DynamicsModel& dynamics,
                        const LocalPotential& potential, std::size_t n, RngStream stream,
                        Exec exec) {
  auto weighted = update(predict(set, dynamics, stream.derive(0), exec), potential, exec);
  Rng rng(stream.derive(1));
  return residual_resample(weighted, n, rng);
}

}  // namespace fkpf
