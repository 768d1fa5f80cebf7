#include "fkpf/leader.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fkpf/filter.hpp"

namespace fkpf {

void HandoffPolicy::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("handoff: lambda must lie in [0,1]");
  if (mode == HandoffMode::subsample) subsample_cfg.validate();
  if (mode == HandoffMode::parametric) gml_cfg.validate();
}

namespace {

double joint_mi(std::span<const StateVec> sensors, const BinarySensorModel& model,
                const ParticleSet& set) {
  const std::size_t s = sensors.size();
  if (s > static_cast<std::size_t>(kMaxJointSensors)) {
    throw InvalidArgument("joint mutual information supports at most " +
                          std::to_string(kMaxJointSensors) + " satellites, got " +
                          std::to_string(s));
  }
  const double total = set.total_weight();
  std::vector<double> p_y(std::size_t{1} << s, 0.0);
  std::vector<double> pi(s);
  double h_cond = 0.0;
  for (const auto& p : set) {
    const double w = p.weight / total;
    for (std::size_t j = 0; j < s; ++j) {
      pi[j] = model.detection_prob(sensors[j], p.state);
      h_cond += w * binary_entropy_bits(pi[j]);
    }
    for (std::size_t y = 0; y < p_y.size(); ++y) {
      double lik = w;
      for (std::size_t j = 0; j < s; ++j) lik *= (y >> j) & 1U ? pi[j] : 1.0 - pi[j];
      p_y[y] += lik;
    }
  }
  double h_y = 0.0;
  for (double q : p_y) {
    if (q > 0.0) h_y -= q * std::log2(q);
  }
  return std::max(0.0, h_y - h_cond);
}

std::vector<StateVec> satellite_positions(const NetworkTopology& topology, std::span<const int> ids) {
  std::vector<StateVec> pos;
  pos.reserve(ids.size());
  for (int id : ids) pos.push_back(topology.satellite(id).position);
  return pos;
}

std::vector<int> candidate_leaders(int current, const HandoffPolicy& policy,
                                   const NetworkTopology& topology) {
  std::vector<int> ids;
  const StateVec here = topology.leader(current).position;
  for (const auto& l : topology.leaders) {
    if (!policy.candidate_radius || l.id == current ||
        distance(l.position, here) <= *policy.candidate_radius) {
      ids.push_back(l.id);
    }
  }
  return ids;
}

}  // namespace

double mi_score(int leader, const NetworkTopology& topology, const BinarySensorModel& model,
                const ParticleSet& set, MiMethod method, Exec exec) {
  if (!set.is_normalized()) throw InvalidState("mi_score: particle set is not normalized");
  const auto positions = satellite_positions(topology, topology.satellites_of(leader));
  if (positions.empty()) return 0.0;
  if (method == MiMethod::joint_exact) return joint_mi(positions, model, set);
  std::vector<double> per(positions.size());
  kernels::per_sensor_mi(positions, model, set, per, exec);
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc;
}

std::vector<double> mi_scores(const NetworkTopology& topology, const BinarySensorModel& model,
                              const ParticleSet& set, Exec exec) {
  if (!set.is_normalized()) throw InvalidState("mi_scores: particle set is not normalized");
  std::vector<StateVec> positions;
  for (const auto& s : topology.satellites) positions.push_back(s.position);
  std::vector<double> per(positions.size());
  kernels::per_sensor_mi(positions, model, set, per, exec);
  std::vector<double> scores(topology.leaders.size(), 0.0);
  for (const auto& l : topology.leaders) {
    double acc = 0.0;
    for (int sid : topology.satellites_of(l.id)) acc += per[static_cast<std::size_t>(sid)];
    scores[static_cast<std::size_t>(l.id)] = acc;
  }
  return scores;
}

int select_leader(std::span<const int> candidates, const NetworkTopology& topology,
                  const BinarySensorModel& model, const ParticleSet& set, MiMethod method,
                  Exec exec) {
  if (candidates.empty()) throw InvalidArgument("select_leader: no candidates");
  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> all;
  if (method == MiMethod::per_sensor_sum) all = mi_scores(topology, model, set, exec);
  int best = sorted.front();
  double best_score = -1.0;
  for (int id : sorted) {
    const double s = method == MiMethod::per_sensor_sum ? all[static_cast<std::size_t>(topology.leader(id).id)]
                                                        : mi_score(id, topology, model, set, method, exec);
    if (s > best_score) {
      best = id;
      best_score = s;
    }
  }
  return best;
}

HandoffOutcome handoff_step(int t, int current_leader, const ParticleSet& set,
                            const HandoffPolicy& policy, const NetworkTopology& topology,
                            const BinarySensorModel& sensor_model, const DynamicsModel& dynamics,
                            RngStream stream, Exec exec) {
  HandoffOutcome out{current_leader, set, {}};
  auto& rec = out.record;
  rec.t = t;
  rec.from = current_leader;
  rec.to = current_leader;

  Rng coin(stream.derive(0));
  rec.checked = coin.bernoulli(policy.lambda);
  if (!rec.checked) return out;

  const auto predicted = predict(set, dynamics, stream.derive(1), exec);
  const auto candidates = candidate_leaders(current_leader, policy, topology);
  const int winner =
      select_leader(candidates, topology, sensor_model, predicted, policy.mi_method, exec);
  if (winner == current_leader) return out;

  rec.to = winner;
  out.leader = winner;
  if (policy.mode == HandoffMode::none) return out;

  const std::size_t n = set.size();
  Rng rng(stream.derive(2));
  if (policy.mode == HandoffMode::subsample) {
    const std::size_t n_b = policy.subsample_cfg.N_b;
    auto compressed = subsample(set, n_b, rng);
    auto rebuilt = reconstruct(compressed, n, rng);
    out.set = std::move(rebuilt.set);
    rec.path = rebuilt.path;
    rec.values_transmitted = n_b;
  } else {
    std::vector<StateVec> states;
    states.reserve(n);
    for (const auto& p : set) states.push_back(p.state);
    GmlConfig cfg = policy.gml_cfg;
    cfg.exec = exec;
    const auto model = gml_fit(states, cfg);
    out.set = sample_mixture(model, n, rng);
    rec.values_transmitted = 5 * cfg.N_p;
  }
  rec.delta = true;
  return out;
}

double empirical_q(std::span<const HandoffRecord> records) {
  if (records.empty()) throw InvalidArgument("empirical_q: no records");
  double count = 0.0;
  for (const auto& r : records) count += r.delta ? 1.0 : 0.0;
  return count / static_cast<double>(records.size());
}

}  // namespace fkpf
