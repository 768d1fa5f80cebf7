#pragma once

// Data-parallel inner loops of the filter. Every kernel has a plain
// serial implementation (the reference used by the tests) and an OpenMP
// implementation. Both write element-wise into caller-provided output,
// and any reduction happens afterwards in index order, so the two agree
// bit for bit whatever the thread count.

#include <span>

#include "fkpf/core.hpp"
#include "fkpf/gaussian.hpp"
#include "fkpf/models.hpp"

namespace fkpf {

enum class Exec { serial, parallel };

namespace kernels {

/// Moves every particle one step. Particle k draws from stream.derive(k).
void propagate(std::span<Particle> particles, const DynamicsModel& model, RngStream stream,
               Exec exec = Exec::parallel);

/// out[k] = potential(particles[k].state).
void evaluate_potential(std::span<const Particle> particles, const LocalPotential& potential,
                        std::span<double> out, Exec exec = Exec::parallel);

/// Per-sensor mutual information (bits) between a binary detector at
/// each of `sensors` and a state distributed as `set`.
void per_sensor_mi(std::span<const StateVec> sensors, const BinarySensorModel& model,
                   const ParticleSet& set, std::span<double> out, Exec exec = Exec::parallel);

/// out[j] = component.pdf(xs[j]).
void component_pdf(std::span<const StateVec> xs, const GaussianComponent& component,
                   std::span<double> out, Exec exec = Exec::parallel);

/// out[a] = sum_j log((1 - alpha[a]) * base[j] + alpha[a] * added[j]).
void two_mixture_loglik(std::span<const double> base, std::span<const double> added,
                        std::span<const double> alphas, std::span<double> out,
                        Exec exec = Exec::parallel);

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace kernels

double binary_entropy_bits(double p);

}  // namespace fkpf
