#pragma once

#include <optional>

#include "fkpf/core.hpp"

namespace fkpf {

struct SubsampleConfig {
  std::size_t N = 300;
  std::size_t N_b = 300;
  std::optional<std::size_t> chi;

  void validate() const;
  /// chi if set, otherwise N / N_b when N_b divides N.
  std::optional<std::size_t> replication_factor() const;
};

/// How an N_b-particle subsample was brought back to N particles.
enum class UpsamplePath { replicate, resample };

/// N_b-particle uniform set drawn from `set` by residual resampling.
ParticleSet subsample(const ParticleSet& set, std::size_t n_b, Rng& rng);

/// Every particle copied exactly chi times, weights 1/(chi N_b). The
/// empirical measure is unchanged.
ParticleSet replicate_upsample(const ParticleSet& set, std::size_t chi);

/// n i.i.d. multinomial draws from the (smaller) set.
ParticleSet resample_upsample(const ParticleSet& set, std::size_t n, Rng& rng);

struct Reconstruction {
  ParticleSet set;
  UpsamplePath path;
};

/// Replicates when n is a multiple of the input size, resamples otherwise.
Reconstruction reconstruct(const ParticleSet& set, std::size_t n, Rng& rng);

}  // namespace fkpf
