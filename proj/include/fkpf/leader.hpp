#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fkpf/core.hpp"
#include "fkpf/gml.hpp"
#include "fkpf/kernels.hpp"
#include "fkpf/models.hpp"
#include "fkpf/subsample.hpp"

namespace fkpf {

enum class HandoffMode { subsample, parametric, none };

enum class MiMethod {
  /// Sum over satellites of the exact single-sensor mutual information.
  per_sensor_sum,
  /// Exact joint mutual information by enumerating all 2^|S| outcomes
  /// (at most 10 satellites).
  joint_exact,
};

struct HandoffPolicy {
  double lambda = 0.2;
  HandoffMode mode = HandoffMode::subsample;
  SubsampleConfig subsample_cfg;
  GmlConfig gml_cfg;
  MiMethod mi_method = MiMethod::per_sensor_sum;
  /// When set, only leaders within this distance of the current leader
  /// are candidates.
  std::optional<double> candidate_radius;

  void validate() const;
};

struct HandoffRecord {
  int t = 0;
  bool checked = false;
  /// True iff the leader changed and the posterior was compressed.
  bool delta = false;
  int from = 0;
  int to = 0;
  std::size_t values_transmitted = 0;
  std::optional<UpsamplePath> path;
};

inline constexpr int kMaxJointSensors = 10;

/// Mutual information (bits) between the state, distributed as `set`,
/// and the observations of the leader's satellites.
double mi_score(int leader, const NetworkTopology& topology, const BinarySensorModel& model,
                const ParticleSet& set, MiMethod method = MiMethod::per_sensor_sum,
                Exec exec = Exec::parallel);

/// Per-sensor-sum scores for every leader, indexed by leader id. Each
/// satellite's term is computed once and shared by the leaders it serves.
std::vector<double> mi_scores(const NetworkTopology& topology, const BinarySensorModel& model,
                              const ParticleSet& set, Exec exec = Exec::parallel);

/// argmax of mi_score over `candidates`; ties go to the lowest id.
int select_leader(std::span<const int> candidates, const NetworkTopology& topology,
                  const BinarySensorModel& model, const ParticleSet& set,
                  MiMethod method = MiMethod::per_sensor_sum, Exec exec = Exec::parallel);

struct HandoffOutcome {
  int leader = 0;
  ParticleSet set;
  HandoffRecord record;
};

/// Leader-change protocol run after each filter step. Draws the lambda
/// coin from stream.derive(0); on heads predicts the cloud one step with
/// stream.derive(1), picks the MI-best leader and, if it differs from the
/// current one, hands off a compressed posterior built with
/// stream.derive(2).
HandoffOutcome handoff_step(int t, int current_leader, const ParticleSet& set,
                            const HandoffPolicy& policy, const NetworkTopology& topology,
                            const BinarySensorModel& sensor_model, const DynamicsModel& dynamics,
                            RngStream stream, Exec exec = Exec::parallel);

/// Fraction of records with delta set.
double empirical_q(std::span<const HandoffRecord> records);

}  // namespace fkpf
