#pragma once

#include <functional>
#include <vector>

#include "fkpf/core.hpp"
#include "fkpf/kernels.hpp"
#include "fkpf/models.hpp"

namespace fkpf {

using PotentialFn = std::function<double(const StateVec&)>;

/// Mutation: every particle moves independently under the dynamics.
/// Weights are carried over untouched.
ParticleSet predict(ParticleSet set, const DynamicsModel& model, RngStream stream,
                    Exec exec = Exec::parallel);

/// Boltzmann-Gibbs reweighting w_k <- w_k G(x_k) / sum_j w_j G(x_j).
ParticleSet update(ParticleSet set, const PotentialFn& potential);
ParticleSet update(ParticleSet set, const LocalPotential& potential, Exec exec = Exec::parallel);

/// Copies particle k floor(n w_k) times, then fills the remaining slots
/// with multinomial draws over the residual weights. Uniform output.
ParticleSet residual_resample(const ParticleSet& set, std::size_t n_out, Rng& rng);

/// n_out i.i.d. categorical draws by weight. Uniform output.
ParticleSet multinomial_resample(const ParticleSet& set, std::size_t n_out, Rng& rng);

/// Replication counts produced by the two resamplers, exposed for
/// testing unbiasedness without materializing particle sets.
std::vector<std::size_t> residual_counts(std::span<const double> weights, std::size_t n_out,
                                         Rng& rng);
std::vector<std::size_t> multinomial_counts(std::span<const double> weights, std::size_t n_out,
                                            Rng& rng);

/// predict -> update -> residual_resample(n). Mutation draws from
/// stream.derive(0), resampling from stream.derive(1).
ParticleSet filter_step(const ParticleSet& set, const DynamicsModel& dynamics,
                        const PotentialFn& potential, std::size_t n, RngStream stream);
ParticleSet filter_step(const ParticleSet& set, const DynamicsModel& dynamics,
                        const LocalPotential& potential, std::size_t n, RngStream stream,
                        Exec exec = Exec::parallel);

}  // namespace fkpf
