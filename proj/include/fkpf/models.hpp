#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fkpf/core.hpp"

namespace fkpf {

enum class Boundary { reflect, none };

/// X_t = X_{t-1} + r0 (cos phi, sin phi) + u, phi ~ U[-pi, pi],
/// u = noise_amp * (U[-1,1], U[-1,1]).
struct DynamicsModel {
  double r0 = 0.02;
  double noise_amp = 0.005;
  Boundary boundary = Boundary::reflect;

  void validate() const;
};

/// Binary proximity detector: P(Y=1 | x) = p_d inside the detection
/// disk of radius r_d, p_f outside.
struct BinarySensorModel {
  double r_d = 0.1151;
  double p_d = 0.9;
  double p_f = 0.05;

  void validate() const;

  /// P(Y = 1 | state) for a sensor at `sensor_pos`.
  double detection_prob(const StateVec& sensor_pos, const StateVec& state) const {
    return squared_norm(state - sensor_pos) <= r_d * r_d ? p_d : p_f;
  }
};

enum class NodeKind { leader, satellite };

struct SensorNode {
  int id = 0;
  StateVec position;
  NodeKind kind = NodeKind::satellite;
};

/// Leaders and satellites live in separate id spaces; ids equal the
/// index into the corresponding vector.
struct NetworkTopology {
  static constexpr int kFormatVersion = 1;

  std::vector<SensorNode> leaders;
  std::vector<SensorNode> satellites;
  double r_c = 0.0;
  std::map<int, std::vector<int>> assignment;
  std::vector<std::string> warnings;

  const SensorNode& leader(int id) const;
  const SensorNode& satellite(int id) const;
  const std::vector<int>& satellites_of(int leader_id) const;

  /// Recomputes `assignment` from positions and r_c.
  void assign();
};

/// sqrt(2 ln(K_s) / K_s).
double connectivity_radius(int num_satellites);

using Observations = std::map<int, bool>;

StateVec propagate(const StateVec& state, const DynamicsModel& model, Rng& rng);

/// propagate() with the heading angle supplied instead of drawn.
StateVec propagate_with_heading(const StateVec& state, const DynamicsModel& model, double phi,
                                Rng& rng);

/// Maps a coordinate back into [0, 1] by specular reflection.
double reflect_unit(double v);

double likelihood(const SensorNode& sensor, const BinarySensorModel& model, bool y,
                  const StateVec& state);

/// Product of per-satellite likelihoods over the leader's satellites.
/// Throws InvalidArgument when an assigned satellite has no observation.
double joint_potential(int leader, const NetworkTopology& topology, const BinarySensorModel& model,
                       const Observations& observations, const StateVec& state);

/// Observations of a fixed set of satellites, flattened for fast
/// repeated evaluation of the joint potential.
class LocalPotential {
 public:
  LocalPotential() = default;
  LocalPotential(const NetworkTopology& topology, std::span<const int> satellite_ids,
                 const BinarySensorModel& model, const Observations& observations);
  /// `bits[id]` is the observation of satellite `id`.
  LocalPotential(const NetworkTopology& topology, std::span<const int> satellite_ids,
                 const BinarySensorModel& model, std::span<const std::uint8_t> bits);

  double operator()(const StateVec& state) const;
  std::size_t num_sensors() const { return positions_.size(); }

 private:
  std::vector<StateVec> positions_;
  std::vector<double> inside_;   // likelihood when the state is inside the disk
  std::vector<double> outside_;  // likelihood when outside
  double r_d2_ = 0.0;

  void add(const StateVec& pos, bool y, const BinarySensorModel& model);
};

LocalPotential make_leader_potential(int leader, const NetworkTopology& topology,
                                     const BinarySensorModel& model,
                                     const Observations& observations);

NetworkTopology generate_network(int num_leaders, int num_satellites, RngStream stream);

Observations simulate_observations(int leader, const NetworkTopology& topology,
                                   const BinarySensorModel& model, const StateVec& true_state,
                                   Rng& rng);

/// One Bernoulli draw per satellite, in satellite id order.
Observations simulate_all_observations(const NetworkTopology& topology,
                                       const BinarySensorModel& model,
                                       const StateVec& true_state, Rng& rng);

/// Lower bound on the ratio of potential values for a leader with
/// `num_sensors` satellites: (min(p_f, 1-p_d) / max(p_d, 1-p_f))^num_sensors.
double potential_regularity(const BinarySensorModel& model, int num_sensors);

nlohmann::json to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const nlohmann::json& doc);

}  // namespace fkpf
