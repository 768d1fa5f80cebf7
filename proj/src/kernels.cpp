#include "fkpf/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fkpf {

double binary_entropy_bits(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

namespace {

double sensor_mi(const StateVec& sensor, const BinarySensorModel& model, const ParticleSet& set) {
  // pi_j(x) takes only the values p_d and p_f, so both entropies depend
  // on the set only through the mass inside the detection disk.
  const double r2 = model.r_d * model.r_d;
  double inside = 0.0;
  for (const auto& p : set) {
    if (squared_norm(p.state - sensor) <= r2) inside += p.weight;
  }
  const double total = set.total_weight();
  const double m = total > 0.0 ? inside / total : 0.0;
  const double p_one = m * model.p_d + (1.0 - m) * model.p_f;
  const double h_cond = m * binary_entropy_bits(model.p_d) + (1.0 - m) * binary_entropy_bits(model.p_f);
  return std::max(0.0, binary_entropy_bits(p_one) - h_cond);
}

double mixture_sum(std::span<const double> base, std::span<const double> added, double alpha) {
  double acc = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j) {
    acc += std::log((1.0 - alpha) * base[j] + alpha * added[j]);
  }
  return acc;
}

}  // namespace

namespace serial {

void propagate(std::span<Particle> particles, const DynamicsModel& model, RngStream stream) {
  for (std::size_t k = 0; k < particles.size(); ++k) {
    Rng rng(stream.derive(k));
    particles[k].state = fkpf::propagate(particles[k].state, model, rng);
  }
}

void evaluate_potential(std::span<const Particle> particles, const LocalPotential& potential,
                        std::span<double> out) {
  for (std::size_t k = 0; k < particles.size(); ++k) out[k] = potential(particles[k].state);
}

void per_sensor_mi(std::span<const StateVec> sensors, const BinarySensorModel& model,
                   const ParticleSet& set, std::span<double> out) {
  for (std::size_t j = 0; j < sensors.size(); ++j) out[j] = sensor_mi(sensors[j], model, set);
}

void component_pdf(std::span<const StateVec> xs, const GaussianComponent& c, std::span<double> out) {
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = c.pdf(xs[j]);
}

void two_mixture_loglik(std::span<const double> base, std::span<const double> added,
                        std::span<const double> alphas, std::span<double> out) {
  for (std::size_t a = 0; a < alphas.size(); ++a) out[a] = mixture_sum(base, added, alphas[a]);
}

}  // namespace serial

namespace omp {

void propagate(std::span<Particle> particles, const DynamicsModel& model, RngStream stream) {
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    Rng rng(stream.derive(static_cast<std::uint64_t>(k)));
    particles[k].state = fkpf::propagate(particles[k].state, model, rng);
  }
}

void evaluate_potential(std::span<const Particle> particles, const LocalPotential& potential,
                        std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = potential(particles[k].state);
}

void per_sensor_mi(std::span<const StateVec> sensors, const BinarySensorModel& model,
                   const ParticleSet& set, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(sensors.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) out[j] = sensor_mi(sensors[j], model, set);
}

void component_pdf(std::span<const StateVec> xs, const GaussianComponent& c, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t j = 0; j < n; ++j) out[j] = c.pdf(xs[j]);
}

void two_mixture_loglik(std::span<const double> base, std::span<const double> added,
                        std::span<const double> alphas, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(alphas.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t a = 0; a < n; ++a) out[a] = mixture_sum(base, added, alphas[a]);
}

}  // namespace omp

namespace kernels {

void propagate(std::span<Particle> particles, const DynamicsModel& model, RngStream stream,
               Exec exec) {
  exec == Exec::serial ? serial::propagate(particles, model, stream)
                       : omp::propagate(particles, model, stream);
}

void evaluate_potential(std::span<const Particle> particles, const LocalPotential& potential,
                        std::span<double> out, Exec exec) {
  if (out.size() != particles.size()) throw InvalidArgument("evaluate_potential: size mismatch");
  exec == Exec::serial ? serial::evaluate_potential(particles, potential, out)
                       : omp::evaluate_potential(particles, potential, out);
}

void per_sensor_mi(std::span<const StateVec> sensors, const BinarySensorModel& model,
                   const ParticleSet& set, std::span<double> out, Exec exec) {
  if (out.size() != sensors.size()) throw InvalidArgument("per_sensor_mi: size mismatch");
  exec == Exec::serial ? serial::per_sensor_mi(sensors, model, set, out)
                       : omp::per_sensor_mi(sensors, model, set, out);
}

void component_pdf(std::span<const StateVec> xs, const GaussianComponent& component,
                   std::span<double> out, Exec exec) {
  if (out.size() != xs.size()) throw InvalidArgument("component_pdf: size mismatch");
  exec == Exec::serial ? serial::component_pdf(xs, component, out)
                       : omp::component_pdf(xs, component, out);
}

void two_mixture_loglik(std::span<const double> base, std::span<const double> added,
                        std::span<const double> alphas, std::span<double> out, Exec exec) {
  if (base.size() != added.size() || out.size() != alphas.size()) {
    throw InvalidArgument("two_mixture_loglik: size mismatch");
  }
  exec == Exec::serial ? serial::two_mixture_loglik(base, added, alphas, out)
                       : omp::two_mixture_loglik(base, added, alphas, out);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace kernels
}  // namespace fkpf
