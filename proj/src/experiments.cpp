#include "fkpf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fkpf/bounds.hpp"
#include "fkpf/filter.hpp"

namespace fkpf {

namespace {

// Stream tags below a trial seed.
enum : std::uint64_t { kWorld = 1, kFilter = 2, kNetwork = 3 };
// Tags below a filter stream.
enum : std::uint64_t { kInit = 1, kStep = 2, kHandoff = 3 };

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HandoffMode handoff_mode(RunMode mode) {
  switch (mode) {
    case RunMode::subsample: return HandoffMode::subsample;
    case RunMode::parametric: return HandoffMode::parametric;
    default: return HandoffMode::none;
  }
}

bool hands_off(RunMode mode) {
  return mode == RunMode::subsample || mode == RunMode::parametric || mode == RunMode::none;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::fixed_leader: return "fixed-leader";
    case RunMode::subsample: return "subsample";
    case RunMode::parametric: return "parametric";
    case RunMode::none: return "none";
    case RunMode::centralized: return "centralized";
  }
  return "unknown";
}

RunMode run_mode_from_string(const std::string& name) {
  for (auto m : {RunMode::fixed_leader, RunMode::subsample, RunMode::parametric, RunMode::none,
                 RunMode::centralized}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown mode '" + name + "'");
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (N < 1 || reference_N < 1 || trials < 1 || T < 1 || K_l < 1 || K_s < 1) {
    throw InvalidArgument("config: N, reference_N, trials, T, K_l and K_s must be positive");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("config: lambda must lie in [0,1]");
  if (mode == RunMode::subsample && (N_b < 1 || N_b > N)) {
    throw InvalidArgument("config: subsample mode needs 1 <= N_b <= N");
  }
  if (mode == RunMode::parametric) {
    if (N_p < 1) throw InvalidArgument("config: parametric mode needs N_p >= 1");
    gml.validate();
  }
  dynamics().validate();
  sensor_model().validate();
}

DynamicsModel ExperimentConfig::dynamics() const { return {r0, noise_amp, Boundary::reflect}; }

BinarySensorModel ExperimentConfig::sensor_model() const {
  const double rc = topology ? topology->r_c : connectivity_radius(K_s);
  return {r_d.value_or(rc / 2.0), p_d, p_f};
}

NetworkTopology ExperimentConfig::network() const {
  if (topology) return *topology;
  return generate_network(K_l, K_s, RngStream(seed, kNetwork));
}

namespace {

std::string init_name(InitStrategy s) {
  return s == InitStrategy::sample_moments ? "sample-moments" : "k-candidate-points";
}

InitStrategy init_from_name(const std::string& s) {
  if (s == "sample-moments") return InitStrategy::sample_moments;
  if (s == "k-candidate-points") return InitStrategy::k_candidate_points;
  throw InvalidArgument("unknown init_strategy '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    auto take = [&](const char* key, auto& field) {
      if (doc.contains(key) && !doc[key].is_null()) field = doc[key].get<std::decay_t<decltype(field)>>();
    };
    take("N", c.N);
    take("N_b", c.N_b);
    take("N_p", c.N_p);
    take("lambda", c.lambda);
    take("K_l", c.K_l);
    take("K_s", c.K_s);
    take("r0", c.r0);
    take("noise_amp", c.noise_amp);
    take("p_d", c.p_d);
    take("p_f", c.p_f);
    if (doc.contains("r_d") && !doc["r_d"].is_null()) c.r_d = doc["r_d"].get<double>();
    take("T", c.T);
    take("trials", c.trials);
    take("reference_N", c.reference_N);
    take("seed", c.seed);
    if (doc.contains("mode")) c.mode = run_mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("mi_method")) {
      const auto m = doc["mi_method"].get<std::string>();
      if (m == "per-sensor-sum") c.mi_method = MiMethod::per_sensor_sum;
      else if (m == "joint-exact") c.mi_method = MiMethod::joint_exact;
      else throw InvalidArgument("unknown mi_method '" + m + "'");
    }
    if (doc.contains("candidate_radius") && !doc["candidate_radius"].is_null()) {
      c.candidate_radius = doc["candidate_radius"].get<double>();
    }
    if (doc.contains("gml")) {
      const auto& g = doc["gml"];
      if (g.contains("alpha_grid")) c.gml.alpha_grid = g["alpha_grid"].get<std::vector<double>>();
      if (g.contains("init_strategy")) c.gml.init_strategy = init_from_name(g["init_strategy"].get<std::string>());
      if (g.contains("local_steps")) c.gml.local_steps = g["local_steps"].get<int>();
      if (g.contains("em_steps")) c.gml.em_steps = g["em_steps"].get<int>();
      if (g.contains("var_floor")) c.gml.var_floor = g["var_floor"].get<double>();
      if (g.contains("var_ceiling")) c.gml.var_ceiling = g["var_ceiling"].get<double>();
      if (g.contains("max_candidates")) c.gml.max_candidates = g["max_candidates"].get<std::size_t>();
    }
    if (doc.contains("topology")) c.topology = topology_from_json(doc["topology"]);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.gml.N_p = c.N_p;
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json doc = {{"N", c.N},
                        {"N_b", c.N_b},
                        {"N_p", c.N_p},
                        {"lambda", c.lambda},
                        {"K_l", c.K_l},
                        {"K_s", c.K_s},
                        {"r0", c.r0},
                        {"noise_amp", c.noise_amp},
                        {"p_d", c.p_d},
                        {"p_f", c.p_f},
                        {"r_d", c.sensor_model().r_d},
                        {"T", c.T},
                        {"trials", c.trials},
                        {"mode", to_string(c.mode)},
                        {"reference_N", c.reference_N},
                        {"seed", c.seed},
                        {"mi_method", c.mi_method == MiMethod::per_sensor_sum ? "per-sensor-sum" : "joint-exact"},
                        {"gml",
                         {{"alpha_grid", c.gml.alpha_grid},
                          {"init_strategy", init_name(c.gml.init_strategy)},
                          {"local_steps", c.gml.local_steps},
                          {"em_steps", c.gml.em_steps},
                          {"var_floor", c.gml.var_floor},
                          {"var_ceiling", c.gml.var_ceiling},
                          {"max_candidates", c.gml.max_candidates}}}};
  if (c.candidate_radius) doc["candidate_radius"] = *c.candidate_radius;
  if (c.topology) doc["topology"] = to_json(*c.topology);
  return doc;
}

// ---------------------------------------------------------------- world

std::uint64_t trial_seed(std::uint64_t seed, std::size_t index) {
  return detail::mix64(seed ^ detail::mix64(static_cast<std::uint64_t>(index) + detail::kGolden));
}

World simulate_world(const ExperimentConfig& config, const NetworkTopology& topology,
                     std::uint64_t seed) {
  Rng rng(RngStream(seed, kWorld));
  const auto dyn = config.dynamics();
  const auto sensor = config.sensor_model();
  World w;
  w.truth.reserve(static_cast<std::size_t>(config.T) + 1);
  w.truth.push_back({rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75)});
  w.observations.emplace_back();
  for (int t = 1; t <= config.T; ++t) {
    w.truth.push_back(propagate(w.truth.back(), dyn, rng));
    std::vector<std::uint8_t> bits(topology.satellites.size());
    for (const auto& s : topology.satellites) {
      bits[static_cast<std::size_t>(s.id)] = rng.bernoulli(sensor.detection_prob(s.position, w.truth.back()));
    }
    w.observations.push_back(std::move(bits));
  }
  return w;
}

// ---------------------------------------------------------------- filters

std::string FilterVariant::key() const {
  std::ostringstream os;
  os << to_string(mode) << "/N=" << N;
  if (mode == RunMode::subsample) os << "/N_b=" << N_b;
  if (mode == RunMode::parametric) os << "/N_p=" << N_p;
  if (hands_off(mode)) os << "/lambda=" << format_double(lambda);
  return os.str();
}

FilterVariant candidate_variant(const ExperimentConfig& c) {
  return {c.mode, c.N, c.N_b, c.N_p, c.lambda};
}

FilterVariant baseline_variant(const ExperimentConfig& c) {
  return {RunMode::none, c.N, c.N, c.N_p, c.lambda};
}

FilterVariant reference_variant(const ExperimentConfig& c) {
  return {RunMode::none, c.reference_N, c.reference_N, c.N_p, c.lambda};
}

FilterRun run_filter(const FilterVariant& variant, const ExperimentConfig& config,
                     const NetworkTopology& topology, const World& world, std::uint64_t seed,
                     Exec exec) {
  const RngStream filter_stream(seed, kFilter);
  const auto dyn = config.dynamics();
  const auto sensor = config.sensor_model();

  HandoffPolicy policy;
  policy.lambda = variant.lambda;
  policy.mode = handoff_mode(variant.mode);
  policy.subsample_cfg = {variant.N, variant.N_b, std::nullopt};
  policy.gml_cfg = config.gml;
  policy.gml_cfg.N_p = variant.N_p;
  policy.mi_method = config.mi_method;
  policy.candidate_radius = config.candidate_radius;

  std::vector<int> all_satellites;
  for (const auto& s : topology.satellites) all_satellites.push_back(s.id);
  std::vector<int> all_leaders;
  for (const auto& l : topology.leaders) all_leaders.push_back(l.id);

  FilterRun run;
  const auto cloud = sample_empirical(
      [](Rng& r) { return StateVec{r.uniform(), r.uniform()}; }, variant.N,
      filter_stream.derive(kInit));
  ParticleSet set = cloud;
  int leader = select_leader(all_leaders, topology, sensor, set, config.mi_method, exec);
  run.estimates.push_back(set.mean());
  run.leaders.push_back(leader);

  try {
    for (int t = 1; t <= config.T; ++t) {
      const auto& bits = world.observations[static_cast<std::size_t>(t)];
      const LocalPotential potential =
          variant.mode == RunMode::centralized
              ? LocalPotential(topology, all_satellites, sensor, bits)
              : LocalPotential(topology, topology.satellites_of(leader), sensor, bits);
      set = filter_step(set, dyn, potential, variant.N, filter_stream.derive(kStep).derive(t), exec);
      if (hands_off(variant.mode)) {
        auto out = handoff_step(t, leader, set, policy, topology, sensor, dyn,
                                filter_stream.derive(kHandoff).derive(t), exec);
        leader = out.leader;
        set = std::move(out.set);
        run.handoffs.push_back(out.record);
      }
      run.estimates.push_back(set.mean());
      run.leaders.push_back(leader);
    }
  } catch (const DegenerateWeights&) {
    run.degenerate = true;
  }
  return run;
}

// ---------------------------------------------------------------- cache

RunCache::RunCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(*dir_);
}

std::optional<std::filesystem::path> RunCache::file_for(const std::string& key) const {
  if (!dir_) return std::nullopt;
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.csv", static_cast<unsigned long long>(fnv1a(key)));
  return *dir_ / name;
}

std::optional<FilterRun> RunCache::load(const std::string& key) {
  const auto path = file_for(key);
  if (!path || !std::filesystem::exists(*path)) return std::nullopt;
  std::ifstream in(*path);
  std::string line;
  if (!std::getline(in, line) || line != "# " + key) return std::nullopt;
  FilterRun run;
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string t, x, y, l;
    std::getline(row, t, ',');
    std::getline(row, x, ',');
    std::getline(row, y, ',');
    std::getline(row, l, ',');
    if (t == "degenerate") {
      run.degenerate = true;
      continue;
    }
    run.estimates.push_back({std::stod(x), std::stod(y)});
    run.leaders.push_back(std::stoi(l));
  }
  return run;
}

void RunCache::store(const std::string& key, const FilterRun& run) {
  const auto path = file_for(key);
  if (!path) return;
  const auto tmp = path->string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << "# " << key << "\n" << "t,x,y,leader\n";
    for (std::size_t t = 0; t < run.estimates.size(); ++t) {
      out << t << ',' << format_double(run.estimates[t].x) << ',' << format_double(run.estimates[t].y)
          << ',' << run.leaders[t] << "\n";
    }
    if (run.degenerate) out << "degenerate,,,\n";
  }
  std::filesystem::rename(tmp, *path);
}

FilterRun RunCache::get_or_run(const std::string& key, const std::function<FilterRun()>& fn) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    if (auto loaded = load(key)) {
      memory_.emplace(key, *loaded);
      return *loaded;
    }
  }
  FilterRun run = fn();
  std::lock_guard lock(mutex_);
  // Handoff records are not persisted; keep them only in memory.
  store(key, run);
  memory_.emplace(key, run);
  return run;
}

// ---------------------------------------------------------------- trials

namespace {

std::string world_key(const ExperimentConfig& c, const NetworkTopology& topology, std::uint64_t seed) {
  std::ostringstream os;
  const auto s = c.sensor_model();
  os << "trial=" << seed << "/T=" << c.T << "/r0=" << format_double(c.r0)
     << "/noise=" << format_double(c.noise_amp) << "/p_d=" << format_double(s.p_d)
     << "/p_f=" << format_double(s.p_f) << "/r_d=" << format_double(s.r_d)
     << "/net=" << fnv1a(to_json(topology).dump())
     << "/mi=" << static_cast<int>(c.mi_method);
  if (c.candidate_radius) os << "/radius=" << format_double(*c.candidate_radius);
  return os.str();
}

std::string gml_key(const GmlConfig& g) {
  std::ostringstream os;
  os << "/gml=" << static_cast<int>(g.init_strategy) << ":" << g.local_steps << ":" << g.em_steps << ":"
     << format_double(g.var_floor) << ":" << format_double(g.var_ceiling) << ":" << g.max_candidates;
  for (double a : g.alpha_grid) os << ":" << format_double(a);
  return os.str();
}

FilterRun cached_run(const FilterVariant& variant, const ExperimentConfig& config,
                     const NetworkTopology& topology, const World& world, std::uint64_t seed,
                     RunCache* cache, Exec exec) {
  auto fn = [&] { return run_filter(variant, config, topology, world, seed, exec); };
  if (!cache) return fn();
  std::string key = world_key(config, topology, seed) + "|" + variant.key();
  if (variant.mode == RunMode::parametric) key += gml_key(config.gml);
  // Handoff records are needed for the candidate only; it is never
  // served from disk because the records are not persisted.
  return cache->get_or_run(key, fn);
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  return run_trial(config, config.network(), seed);
}

TrialResult run_trial(const ExperimentConfig& config, const NetworkTopology& topology,
                      std::uint64_t seed, RunCache* cache, Exec exec) {
  const World world = simulate_world(config, topology, seed);
  TrialResult r;
  r.true_states = world.truth;

  const auto cand_v = candidate_variant(config);
  const auto base_v = baseline_variant(config);
  const auto ref_v = reference_variant(config);

  const FilterRun cand = run_filter(cand_v, config, topology, world, seed, exec);
  const FilterRun ref = cached_run(ref_v, config, topology, world, seed, cache, exec);
  const FilterRun base = base_v.key() == cand_v.key()
                             ? cand
                             : cached_run(base_v, config, topology, world, seed, cache, exec);
  r.estimates = cand.estimates;
  r.reference_estimates = ref.estimates;
  r.baseline_estimates = base.estimates;
  r.handoffs = cand.handoffs;
  r.degenerate = cand.degenerate || ref.degenerate || base.degenerate;
  return r;
}

// ---------------------------------------------------------------- metrics

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::nan("");
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double rms_error(const std::vector<StateVec>& a, const std::vector<StateVec>& b, std::size_t from) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t t = from; t < a.size() && t < b.size(); ++t, ++n) acc += squared_norm(a[t] - b[t]);
  return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  BoxStats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.q25 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q75 = quantile_sorted(values, 0.75);
  s.min = values.front();
  s.max = values.back();
  const double iqr = s.q75 - s.q25;
  const double lo_fence = s.q25 - 1.5 * iqr;
  const double hi_fence = s.q75 + 1.5 * iqr;
  s.lower_whisker = *std::lower_bound(values.begin(), values.end(), lo_fence);
  s.upper_whisker = *std::prev(std::upper_bound(values.begin(), values.end(), hi_fence));
  return s;
}

double compression_factor(const ExperimentConfig& config) {
  switch (config.mode) {
    case RunMode::subsample:
      return static_cast<double>(config.N) / static_cast<double>(config.N_b);
    case RunMode::parametric:
      return 2.0 * static_cast<double>(config.N) / (5.0 * static_cast<double>(config.N_p));
    default:
      throw InvalidArgument("compression_factor: mode '" + to_string(config.mode) +
                            "' transmits no compressed posterior");
  }
}

double window_rms(const std::vector<double>& curve, std::size_t from, std::size_t to) {
  to = std::min(to, curve.size());
  if (from >= to) throw InvalidArgument("window_rms: empty window");
  double acc = 0.0;
  for (std::size_t t = from; t < to; ++t) acc += curve[t] * curve[t];
  return std::sqrt(acc / static_cast<double>(to - from));
}

AggregateMetrics run_monte_carlo(const ExperimentConfig& config, const MonteCarloOptions& options) {
  config.validate();
  const NetworkTopology topology = config.network();
  const std::size_t trials = config.trials;
  std::vector<TrialResult> results(trials);

  const auto n = static_cast<std::ptrdiff_t>(trials);
  const int threads = options.threads > 0 ? options.threads : kernels::max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    results[idx] = run_trial(config, topology, trial_seed(config.seed, idx), options.cache);
  }

  AggregateMetrics m;
  m.mode = config.mode;
  m.sensor = config.sensor_model();
  m.N = config.N;
  m.N_b = config.N_b;
  const std::size_t steps = static_cast<std::size_t>(config.T) + 1;
  std::vector<double> se(steps, 0.0), sae(steps, 0.0);
  std::size_t used = 0;
  std::size_t deltas = 0, records = 0;
  const std::size_t final_from = steps - std::max<std::size_t>(1, static_cast<std::size_t>(config.T) / 4);
  for (std::size_t i = 0; i < trials; ++i) {
    const auto& r = results[i];
    if (r.degenerate) {
      ++m.excluded_trials;
      continue;
    }
    ++used;
    for (std::size_t t = 0; t < steps; ++t) {
      se[t] += squared_norm(r.estimates[t] - r.true_states[t]);
      sae[t] += squared_norm(r.estimates[t] - r.reference_estimates[t]);
    }
    const double cand = rms_error(r.estimates, r.reference_estimates, 1);
    const double base = rms_error(r.baseline_estimates, r.reference_estimates, 1);
    m.deterioration_ratio.push_back(cand == base ? 1.0 : cand / base);
    m.final_rmse.push_back(rms_error(r.estimates, r.true_states, final_from));
    m.trial_index.push_back(i);
    for (const auto& h : r.handoffs) {
      m.handoffs.push_back({i, h});
      ++records;
      deltas += h.delta ? 1 : 0;
    }
  }
  if (used == 0) throw DegenerateWeights("run_monte_carlo: every trial collapsed");
  for (std::size_t t = 0; t < steps; ++t) {
    m.rmse.push_back(std::sqrt(se[t] / static_cast<double>(used)));
    m.rmsae.push_back(std::sqrt(sae[t] / static_cast<double>(used)));
  }
  m.deterioration = box_stats(m.deterioration_ratio);
  m.empirical_q = records ? static_cast<double>(deltas) / static_cast<double>(records) : 0.0;
  if (config.mode == RunMode::subsample || config.mode == RunMode::parametric) {
    m.compression_factor = compression_factor(config);
  }
  if (config.mode == RunMode::subsample && config.N % config.N_b == 0) {
    m.chi = static_cast<double>(config.N / config.N_b);
  }
  return m;
}

// ---------------------------------------------------------------- concentration checks

TestDistribution uniform_distribution() {
  return {"uniform", [](Rng& r) { return StateVec{r.uniform(), 0.0}; },
          {[](const StateVec& s) { return s.x; }, 1.0}, 0.5};
}

TestDistribution two_point_distribution() {
  return {"two-point", [](Rng& r) { return StateVec{r.bernoulli(0.5) ? 1.0 : 0.0, 0.0}; },
          {[](const StateVec& s) { return s.x; }, 1.0}, 0.5};
}

TestDistribution truncated_gaussian_distribution() {
  // N(0.5, 0.2^2) restricted to [0, 1]; symmetric, so the mean is 0.5.
  return {"truncated-gaussian",
          [](Rng& r) {
            for (;;) {
              const double v = 0.5 + 0.2 * r.normal();
              if (v >= 0.0 && v <= 1.0) return StateVec{v, 0.0};
            }
          },
          {[](const StateVec& s) { return s.x; }, 1.0}, 0.5};
}

TestDistribution point_mass_distribution() {
  return {"point-mass", [](Rng&) { return StateVec{0.5, 0.5}; },
          {[](const StateVec& s) { return s.x; }, 1.0}, 0.5};
}

TestDistribution rademacher_distribution() {
  return {"rademacher", [](Rng& r) { return StateVec{r.bernoulli(0.5) ? 1.0 : 0.0, 0.0}; },
          {[](const StateVec& s) { return 2.0 * s.x - 1.0; }, 2.0}, 0.0};
}

namespace {

// |mean of h over N draws - known mean| for each repetition.
std::vector<double> sampling_errors(const TestDistribution& dist, std::size_t N, std::size_t reps,
                                    RngStream stream) {
  std::vector<double> err(reps);
  const auto n = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng(stream.derive(static_cast<std::uint64_t>(i)));
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) acc += dist.h(dist.sampler(rng));
    err[static_cast<std::size_t>(i)] = std::abs(acc / static_cast<double>(N) - dist.mean);
  }
  return err;
}

}  // namespace

Lemma1Check verify_lemma1(const TestDistribution& dist, std::size_t N, double p, std::size_t reps,
                          RngStream stream) {
  if (reps < 100) throw InvalidArgument("verify_lemma1: reps must be >= 100");
  if (N < 1) throw InvalidArgument("verify_lemma1: N must be >= 1");
  const auto err = sampling_errors(dist, N, reps, stream);
  double acc = 0.0;
  for (double e : err) acc += std::pow(e, p);
  Lemma1Check c;
  c.empirical = std::pow(acc / static_cast<double>(reps), 1.0 / p);
  c.bound = std::pow(bounds::c_of_p(p), 1.0 / p) * dist.h.osc_bound / std::sqrt(static_cast<double>(N));
  c.pass = c.empirical <= c.bound * (1.0 + 3.0 / std::sqrt(static_cast<double>(reps)));
  return c;
}

std::vector<MgfRow> verify_mgf(const TestDistribution& dist, std::size_t N,
                               const std::vector<double>& epsilon_grid, std::size_t reps,
                               RngStream stream) {
  if (reps < 1 || N < 1) throw InvalidArgument("verify_mgf: reps and N must be >= 1");
  const auto err = sampling_errors(dist, N, reps, stream);
  const double root_n = std::sqrt(static_cast<double>(N));
  std::vector<MgfRow> rows;
  for (double eps : epsilon_grid) {
    double acc = 0.0;
    for (double e : err) acc += std::exp(eps * root_n * e);
    MgfRow row;
    row.epsilon = eps;
    row.empirical = acc / static_cast<double>(reps);
    row.exact_bound = bounds::mgf_bound(eps, dist.h.osc_bound, N, bounds::MgfForm::exact);
    row.simple_bound = bounds::mgf_bound(eps, dist.h.osc_bound, N, bounds::MgfForm::simple);
    row.pass = row.empirical <= row.exact_bound * (1.0 + 5.0 / std::sqrt(static_cast<double>(reps)));
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- output

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_provenance(std::ostream& out, const AggregateMetrics& m) {
  out << "# mode=" << to_string(m.mode) << " N=" << m.N << " N_b=" << m.N_b
      << " p_d=" << format_double(m.sensor.p_d) << " p_f=" << format_double(m.sensor.p_f)
      << " r_d=" << format_double(m.sensor.r_d) << "\n";
}

}  // namespace

void emit_results(const AggregateMetrics& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string mode = to_string(m.mode);

  {
    auto out = open_csv(dir / "rmse.csv");
    write_provenance(out, m);
    out << "t,mode,rmse\n";
    for (std::size_t t = 0; t < m.rmse.size(); ++t) out << t << ',' << mode << ',' << format_double(m.rmse[t]) << "\n";
  }
  {
    auto out = open_csv(dir / "rmsae.csv");
    write_provenance(out, m);
    out << "t,mode,rmsae\n";
    for (std::size_t t = 0; t < m.rmsae.size(); ++t) out << t << ',' << mode << ',' << format_double(m.rmsae[t]) << "\n";
  }
  {
    auto out = open_csv(dir / "handoffs.csv");
    write_provenance(out, m);
    out << "trial,t,checked,delta,from,to,values_transmitted\n";
    for (const auto& h : m.handoffs) {
      const auto& r = h.record;
      out << h.trial << ',' << r.t << ',' << int(r.checked) << ',' << int(r.delta) << ',' << r.from
          << ',' << r.to << ',' << r.values_transmitted << "\n";
    }
  }
  {
    auto out = open_csv(dir / "deterioration.csv");
    write_provenance(out, m);
    out << "trial,ratio,compression_factor,mode\n";
    const std::string cf = m.compression_factor ? format_double(*m.compression_factor) : "";
    for (std::size_t i = 0; i < m.deterioration_ratio.size(); ++i) {
      out << m.trial_index[i] << ',' << format_double(m.deterioration_ratio[i]) << ',' << cf << ','
          << mode << "\n";
    }
  }
  {
    auto out = open_csv(dir / "bound_overlay.csv");
    write_provenance(out, m);
    out << "compression_factor,theoretical_ratio,naive_ratio\n";
    if (m.chi && !m.deterioration_ratio.empty()) {
      out << format_double(*m.compression_factor) << ','
          << format_double(bounds::deterioration_factor(m.empirical_q, *m.chi, 2)) << ','
          << format_double(std::sqrt(*m.chi)) << "\n";
    }
  }
}

}  // namespace fkpf
