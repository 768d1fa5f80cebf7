#include "fkpf/models.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace fkpf {

void DynamicsModel::validate() const {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw InvalidArgument("dynamics: r0 must be > 0");
  if (!(noise_amp >= 0.0) || !std::isfinite(noise_amp)) {
    throw InvalidArgument("dynamics: noise_amp must be >= 0");
  }
}

void BinarySensorModel::validate() const {
  if (!(r_d > 0.0)) throw InvalidArgument("sensor: r_d must be > 0");
  if (!(p_d > 0.0 && p_d < 1.0)) throw InvalidArgument("sensor: p_d must lie in (0,1)");
  if (!(p_f > 0.0 && p_f < 1.0)) throw InvalidArgument("sensor: p_f must lie in (0,1)");
  if (!(p_f < p_d)) throw InvalidArgument("sensor: p_f must be smaller than p_d");
}

const SensorNode& NetworkTopology::leader(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= leaders.size()) {
    throw InvalidArgument("unknown leader id " + std::to_string(id));
  }
  return leaders[static_cast<std::size_t>(id)];
}

const SensorNode& NetworkTopology::satellite(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= satellites.size()) {
    throw InvalidArgument("unknown satellite id " + std::to_string(id));
  }
  return satellites[static_cast<std::size_t>(id)];
}

const std::vector<int>& NetworkTopology::satellites_of(int leader_id) const {
  auto it = assignment.find(leader_id);
  if (it == assignment.end()) throw InvalidArgument("unknown leader id " + std::to_string(leader_id));
  return it->second;
}

void NetworkTopology::assign() {
  assignment.clear();
  for (const auto& l : leaders) {
    auto& ids = assignment[l.id];
    for (const auto& s : satellites) {
      if (distance(l.position, s.position) <= r_c) ids.push_back(s.id);
    }
  }
}

double connectivity_radius(int num_satellites) {
  if (num_satellites < 1) throw InvalidArgument("connectivity_radius: K_s must be >= 1");
  const double k = static_cast<double>(num_satellites);
  return std::sqrt(2.0 * std::log(k) / k);
}

double reflect_unit(double v) {
  // Fold onto the period-2 sawtooth; handles steps longer than the box.
  double r = std::fmod(std::abs(v), 2.0);
  return r > 1.0 ? 2.0 - r : r;
}

StateVec propagate_with_heading(const StateVec& state, const DynamicsModel& model, double phi,
                                Rng& rng) {
  StateVec next{state.x + model.r0 * std::cos(phi), state.y + model.r0 * std::sin(phi)};
  if (model.noise_amp > 0.0) {
    next.x += model.noise_amp * rng.uniform(-1.0, 1.0);
    next.y += model.noise_amp * rng.uniform(-1.0, 1.0);
  }
  if (model.boundary == Boundary::reflect) {
    next.x = reflect_unit(next.x);
    next.y = reflect_unit(next.y);
  }
  return next;
}

StateVec propagate(const StateVec& state, const DynamicsModel& model, Rng& rng) {
  const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return propagate_with_heading(state, model, phi, rng);
}

double likelihood(const SensorNode& sensor, const BinarySensorModel& model, bool y,
                  const StateVec& state) {
  const double p1 = model.detection_prob(sensor.position, state);
  return y ? p1 : 1.0 - p1;
}

double joint_potential(int leader, const NetworkTopology& topology, const BinarySensorModel& model,
                       const Observations& observations, const StateVec& state) {
  double g = 1.0;
  for (int sid : topology.satellites_of(leader)) {
    auto it = observations.find(sid);
    if (it == observations.end()) {
      throw InvalidArgument("joint_potential: missing observation for satellite " +
                            std::to_string(sid));
    }
    g *= likelihood(topology.satellite(sid), model, it->second, state);
  }
  return g;
}

LocalPotential::LocalPotential(const NetworkTopology& topology, std::span<const int> satellite_ids,
                               const BinarySensorModel& model, const Observations& observations)
    : r_d2_(model.r_d * model.r_d) {
  positions_.reserve(satellite_ids.size());
  for (int sid : satellite_ids) {
    auto it = observations.find(sid);
    if (it == observations.end()) {
      throw InvalidArgument("missing observation for satellite " + std::to_string(sid));
    }
    add(topology.satellite(sid).position, it->second, model);
  }
}

LocalPotential::LocalPotential(const NetworkTopology& topology, std::span<const int> satellite_ids,
                               const BinarySensorModel& model, std::span<const std::uint8_t> bits)
    : r_d2_(model.r_d * model.r_d) {
  positions_.reserve(satellite_ids.size());
  for (int sid : satellite_ids) {
    if (sid < 0 || static_cast<std::size_t>(sid) >= bits.size()) {
      throw InvalidArgument("missing observation for satellite " + std::to_string(sid));
    }
    add(topology.satellite(sid).position, bits[static_cast<std::size_t>(sid)] != 0, model);
  }
}

void LocalPotential::add(const StateVec& pos, bool y, const BinarySensorModel& model) {
  positions_.push_back(pos);
  inside_.push_back(y ? model.p_d : 1.0 - model.p_d);
  outside_.push_back(y ? model.p_f : 1.0 - model.p_f);
}

double LocalPotential::operator()(const StateVec& state) const {
  double g = 1.0;
  for (std::size_t j = 0; j < positions_.size(); ++j) {
    g *= squared_norm(state - positions_[j]) <= r_d2_ ? inside_[j] : outside_[j];
  }
  return g;
}

LocalPotential make_leader_potential(int leader, const NetworkTopology& topology,
                                     const BinarySensorModel& model,
                                     const Observations& observations) {
  return LocalPotential(topology, topology.satellites_of(leader), model, observations);
}

NetworkTopology generate_network(int num_leaders, int num_satellites, RngStream stream) {
  if (num_leaders < 1 || num_satellites < 1) {
    throw InvalidArgument("generate_network: K_l and K_s must be >= 1");
  }
  Rng rng(stream);
  NetworkTopology topo;
  for (int i = 0; i < num_leaders; ++i) {
    StateVec pos{rng.uniform(), rng.uniform()};
    topo.leaders.push_back({i, pos, NodeKind::leader});
  }
  for (int j = 0; j < num_satellites; ++j) {
    StateVec pos{rng.uniform(), rng.uniform()};
    topo.satellites.push_back({j, pos, NodeKind::satellite});
  }
  topo.r_c = connectivity_radius(num_satellites);
  if (topo.r_c == 0.0) {
    topo.warnings.emplace_back("K_s = 1 gives r_c = 0; only co-located satellites connect");
  }
  topo.assign();
  return topo;
}

Observations simulate_observations(int leader, const NetworkTopology& topology,
                                   const BinarySensorModel& model, const StateVec& true_state,
                                   Rng& rng) {
  Observations obs;
  for (int sid : topology.satellites_of(leader)) {
    const double p1 = model.detection_prob(topology.satellite(sid).position, true_state);
    obs[sid] = rng.bernoulli(p1);
  }
  return obs;
}

Observations simulate_all_observations(const NetworkTopology& topology,
                                       const BinarySensorModel& model,
                                       const StateVec& true_state, Rng& rng) {
  Observations obs;
  for (const auto& s : topology.satellites) {
    obs[s.id] = rng.bernoulli(model.detection_prob(s.position, true_state));
  }
  return obs;
}

double potential_regularity(const BinarySensorModel& model, int num_sensors) {
  const double lo = std::min(model.p_f, 1.0 - model.p_d);
  const double hi = std::max(model.p_d, 1.0 - model.p_f);
  return std::pow(lo / hi, num_sensors);
}

namespace {

nlohmann::json nodes_to_json(const std::vector<SensorNode>& nodes) {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}});
  }
  return arr;
}

std::vector<SensorNode> nodes_from_json(const nlohmann::json& arr, NodeKind kind) {
  std::vector<SensorNode> nodes;
  for (const auto& n : arr) {
    SensorNode node{n.at("id").get<int>(), {n.at("x").get<double>(), n.at("y").get<double>()}, kind};
    if (node.id != static_cast<int>(nodes.size())) {
      throw InvalidArgument("topology: node ids must be 0..K-1 in order");
    }
    nodes.push_back(node);
  }
  return nodes;
}

}  // namespace

nlohmann::json to_json(const NetworkTopology& topology) {
  return {{"version", NetworkTopology::kFormatVersion},
          {"r_c", topology.r_c},
          {"leaders", nodes_to_json(topology.leaders)},
          {"satellites", nodes_to_json(topology.satellites)},
          {"warnings", topology.warnings}};
}

NetworkTopology topology_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != NetworkTopology::kFormatVersion) {
      throw InvalidArgument("topology: unsupported format version");
    }
    NetworkTopology topo;
    topo.r_c = doc.at("r_c").get<double>();
    topo.leaders = nodes_from_json(doc.at("leaders"), NodeKind::leader);
    topo.satellites = nodes_from_json(doc.at("satellites"), NodeKind::satellite);
    if (doc.contains("warnings")) topo.warnings = doc["warnings"].get<std::vector<std::string>>();
    topo.assign();
    return topo;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("topology: malformed document: ") + e.what());
  }
}

}  // namespace fkpf
