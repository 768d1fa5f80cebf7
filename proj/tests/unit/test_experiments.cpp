#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fkpf/errors.hpp"
#include "fkpf/experiments.hpp"

using namespace fkpf;

namespace {

ExperimentConfig small_config(RunMode mode = RunMode::subsample) {
  ExperimentConfig c;
  c.N = 60;
  c.N_b = 10;
  c.N_p = 3;
  c.T = 12;
  c.trials = 4;
  c.reference_N = 200;
  c.K_l = 8;
  c.K_s = 60;
  c.mode = mode;
  c.seed = 42;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("fkpf_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config json round trip and validation") {
  auto c = small_config(RunMode::parametric);
  c.r_d = 0.07;
  const auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.gml.N_p == 3);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mode", "bogus"}}), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"N", 10}, {"N_b", 20}}), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"N", "many"}}), InvalidArgument);
  CHECK(run_mode_from_string("fixed-leader") == RunMode::fixed_leader);
}

TEST_CASE("world depends only on the seed and trial") {
  const auto c = small_config();
  const auto net = c.network();
  const auto a = simulate_world(c, net, trial_seed(c.seed, 1));
  auto c2 = c;
  c2.mode = RunMode::centralized;
  const auto b = simulate_world(c2, net, trial_seed(c.seed, 1));
  CHECK(a.truth == b.truth);
  CHECK(a.observations == b.observations);
  CHECK(a.truth.size() == static_cast<std::size_t>(c.T) + 1);
  for (const auto& s : a.truth) {
    CHECK(s.x >= 0);
    CHECK(s.x <= 1);
  }
  CHECK(a.truth[0].x >= 0.25);
  CHECK(a.truth[0].x <= 0.75);
  const auto d = simulate_world(c, net, trial_seed(c.seed, 2));
  CHECK_FALSE(d.truth == a.truth);
}

TEST_CASE("run_trial: lengths, determinism and mode semantics") {
  const auto c = small_config();
  const auto r = run_trial(c, trial_seed(c.seed, 0));
  const auto n = static_cast<std::size_t>(c.T) + 1;
  CHECK(r.true_states.size() == n);
  CHECK(r.estimates.size() == n);
  CHECK(r.reference_estimates.size() == n);
  CHECK(r.handoffs.size() == static_cast<std::size_t>(c.T));
  const auto again = run_trial(c, trial_seed(c.seed, 0));
  CHECK(again.estimates == r.estimates);
  CHECK(again.reference_estimates == r.reference_estimates);

  auto fixed = small_config(RunMode::fixed_leader);
  const auto rf = run_trial(fixed, trial_seed(c.seed, 0));
  CHECK(rf.handoffs.empty());
  const auto net = fixed.network();
  const auto world = simulate_world(fixed, net, trial_seed(c.seed, 0));
  const auto run = run_filter(candidate_variant(fixed), fixed, net, world, trial_seed(c.seed, 0));
  for (int l : run.leaders) CHECK(l == run.leaders.front());

  auto none = small_config(RunMode::none);
  for (const auto& h : run_trial(none, trial_seed(c.seed, 0)).handoffs) {
    CHECK_FALSE(h.delta);
    CHECK(h.values_transmitted == 0);
  }
}

TEST_CASE("candidate equal to the reference has zero approximation error") {
  auto c = small_config(RunMode::none);
  c.N = c.reference_N;
  c.N_b = c.N;
  const auto r = run_trial(c, trial_seed(c.seed, 3));
  CHECK(r.estimates == r.reference_estimates);
  const auto m = run_monte_carlo(c);
  for (double v : m.rmsae) CHECK(v == 0.0);
}

TEST_CASE("run_monte_carlo: self comparison, box stats, q") {
  auto c = small_config(RunMode::none);
  const auto m = run_monte_carlo(c);
  for (double r : m.deterioration_ratio) CHECK(r == 1.0);
  CHECK(m.deterioration_ratio.size() == c.trials);
  CHECK(m.empirical_q == 0.0);
  for (double v : m.rmse) CHECK(v >= 0.0);

  auto one = small_config();
  one.trials = 1;
  const auto m1 = run_monte_carlo(one);
  const auto& b = m1.deterioration;
  CHECK(b.q25 == b.median);
  CHECK(b.median == b.q75);
  CHECK(b.lower_whisker == b.upper_whisker);
  CHECK(b.min == b.max);

  const auto ms = run_monte_carlo(small_config());
  CHECK(ms.compression_factor == 6.0);
  CHECK(ms.chi == 6.0);
  CHECK(ms.empirical_q <= c.lambda + 3 * std::sqrt(c.lambda * (1 - c.lambda) / double(ms.handoffs.size())));
}

TEST_CASE("box_stats") {
  const auto s = box_stats({1, 2, 3, 4, 5, 6, 7, 8, 100});
  CHECK(s.median == 5);
  CHECK(s.q25 == 3);
  CHECK(s.q75 == 7);
  CHECK(s.upper_whisker == 8);
  CHECK(s.lower_whisker == 1);
  CHECK(s.max == 100);
}

TEST_CASE("compression_factor examples") {
  auto c = small_config();
  c.N = 300;
  c.N_b = 10;
  CHECK(compression_factor(c) == 30.0);
  c.N_b = 300;
  CHECK(compression_factor(c) == 1.0);
  c.mode = RunMode::parametric;
  c.N_p = 24;
  CHECK(compression_factor(c) == 5.0);
  c.mode = RunMode::none;
  CHECK_THROWS_AS(compression_factor(c), InvalidArgument);
  CHECK(window_rms({3, 4, 4}, 1, 3) == 4.0);
}

TEST_CASE("verify_lemma1 examples") {
  const auto u = verify_lemma1(uniform_distribution(), 100, 2, 4000, RngStream(1));
  CHECK(u.pass);
  CHECK(u.bound == doctest::Approx(0.1));
  CHECK(u.empirical == doctest::Approx(1 / std::sqrt(1200.0)).epsilon(0.05));
  const auto pm = verify_lemma1(point_mass_distribution(), 50, 3, 200, RngStream(2));
  CHECK(pm.empirical == 0.0);
  CHECK(pm.pass);
  const auto p1 = verify_lemma1(uniform_distribution(), 100, 1, 4000, RngStream(3));
  CHECK(p1.bound == doctest::Approx(0.1));
  CHECK(p1.empirical == doctest::Approx(std::sqrt(1 / 1200.0) * std::sqrt(2 / std::numbers::pi)).epsilon(0.05));
  CHECK_THROWS_AS(verify_lemma1(uniform_distribution(), 10, 2, 50, RngStream(4)), InvalidArgument);
}

TEST_CASE("verify_mgf examples") {
  const auto rows = verify_mgf(rademacher_distribution(), 50, {0.0, 0.5}, 20000, RngStream(5));
  CHECK(rows[0].empirical == 1.0);
  CHECK(rows[0].exact_bound == 1.0);
  CHECK(rows[0].pass);
  CHECK(rows[1].pass);
  for (const auto& r : rows) CHECK(r.exact_bound <= r.simple_bound);
}

TEST_CASE("emit_results: files, headers, exact round trip, determinism") {
  const auto c = small_config();
  const auto m = run_monte_carlo(c);
  const auto dir = temp_dir("emit");
  emit_results(m, dir);
  for (const char* f : {"rmse.csv", "rmsae.csv", "handoffs.csv", "deterioration.csv", "bound_overlay.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto rmse = read_csv(dir / "rmse.csv");
  CHECK(rmse[0] == std::vector<std::string>{"t", "mode", "rmse"});
  REQUIRE(rmse.size() == m.rmse.size() + 1);
  for (std::size_t t = 0; t < m.rmse.size(); ++t) CHECK(std::stod(rmse[t + 1][2]) == m.rmse[t]);
  CHECK(read_csv(dir / "deterioration.csv").size() == c.trials + 1);
  CHECK(read_csv(dir / "handoffs.csv")[0].size() == 7);

  const auto dir2 = temp_dir("emit2");
  MonteCarloOptions opts;
  opts.threads = 3;
  emit_results(run_monte_carlo(c, opts), dir2);
  for (const char* f : {"rmse.csv", "rmsae.csv", "handoffs.csv", "deterioration.csv", "bound_overlay.csv"}) {
    CHECK(slurp(dir / f) == slurp(dir2 / f));
  }

  const auto empty_dir = temp_dir("emit_empty");
  AggregateMetrics empty;
  emit_results(empty, empty_dir);
  CHECK(read_csv(empty_dir / "rmse.csv").size() == 1);
  CHECK(read_csv(empty_dir / "deterioration.csv").size() == 1);

  CHECK_THROWS_AS(emit_results(m, "/proc/fkpf_cannot_write"), IoError);
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("run cache persists and reuses runs") {
  const auto dir = temp_dir("cache");
  const auto c = small_config();
  const auto fresh = run_monte_carlo(c);
  {
    RunCache cache(dir);
    MonteCarloOptions o;
    o.cache = &cache;
    const auto m = run_monte_carlo(c, o);
    CHECK(m.rmsae == fresh.rmsae);
  }
  CHECK_FALSE(std::filesystem::is_empty(dir));
  RunCache reloaded(dir);
  MonteCarloOptions o;
  o.cache = &reloaded;
  const auto again = run_monte_carlo(c, o);
  CHECK(again.rmsae == fresh.rmsae);
  CHECK(again.deterioration_ratio == fresh.deterioration_ratio);
}
