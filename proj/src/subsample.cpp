#include "fkpf/subsample.hpp"

#include <string>

#include "fkpf/filter.hpp"

namespace fkpf {

void SubsampleConfig::validate() const {
  if (N_b < 1 || N_b > N) throw InvalidArgument("subsample config: need 1 <= N_b <= N");
  if (chi && *chi * N_b != N) {
    throw InvalidArgument("subsample config: chi * N_b must equal N");
  }
}

std::optional<std::size_t> SubsampleConfig::replication_factor() const {
  if (chi) return chi;
  if (N_b > 0 && N % N_b == 0) return N / N_b;
  return std::nullopt;
}

ParticleSet subsample(const ParticleSet& set, std::size_t n_b, Rng& rng) {
  if (n_b == 0 || n_b > set.size()) {
    throw InvalidArgument("subsample: N_b must lie in [1, " + std::to_string(set.size()) + "]");
  }
  return residual_resample(set, n_b, rng);
}

ParticleSet replicate_upsample(const ParticleSet& set, std::size_t chi) {
  if (chi == 0) throw InvalidArgument("replicate_upsample: chi must be >= 1");
  std::vector<Particle> out;
  out.reserve(set.size() * chi);
  const double total = set.total_weight();
  for (const auto& p : set) {
    for (std::size_t c = 0; c < chi; ++c) {
      out.push_back({p.state, p.weight / (total * static_cast<double>(chi))});
    }
  }
  return ParticleSet(std::move(out));
}

ParticleSet resample_upsample(const ParticleSet& set, std::size_t n, Rng& rng) {
  if (n < set.size()) throw InvalidArgument("resample_upsample: N must be >= N_b");
  return multinomial_resample(set, n, rng);
}

Reconstruction reconstruct(const ParticleSet& set, std::size_t n, Rng& rng) {
  if (set.empty()) throw InvalidArgument("reconstruct: empty set");
  if (n % set.size() == 0) return {replicate_upsample(set, n / set.size()), UpsamplePath::replicate};
  return {resample_upsample(set, n, rng), UpsamplePath::resample};
}

}  // namespace fkpf
