#include <doctest.h>

#include <cmath>

#include "fkpf/errors.hpp"
#include "fkpf/filter.hpp"

using namespace fkpf;

namespace {
ParticleSet two_equal() {
  return ParticleSet({{{0.1, 0.1}, 0.5}, {{0.9, 0.9}, 0.5}});
}
}  // namespace

TEST_CASE("predict examples") {
  DynamicsModel m;
  m.noise_amp = 0.0;
  std::vector<StateVec> xs(50, StateVec{0.5, 0.5});
  const auto out = predict(ParticleSet::uniform(xs), m, RngStream(1));
  for (const auto& p : out) {
    CHECK(distance(p.state, {0.5, 0.5}) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(p.weight == 1.0 / 50);
  }
  CHECK_THROWS_AS(predict(ParticleSet({{{0, 0}, 0.2}}), m, RngStream(1)), InvalidState);
}

TEST_CASE("update examples") {
  const auto c = update(two_equal(), [](const StateVec&) { return 3.0; });
  CHECK(c[0].weight == 0.5);
  const PotentialFn g1 = [](const StateVec& s) { return s.x < 0.5 ? 0.9 : 0.1; };
  const PotentialFn g2 = [](const StateVec& s) { return s.x < 0.5 ? 0.09 : 0.01; };
  const auto a = update(two_equal(), g1);
  const auto b = update(two_equal(), g2);
  CHECK(a[0].weight == doctest::Approx(0.9));
  CHECK(a[1].weight == doctest::Approx(0.1));
  CHECK(b[0].weight == doctest::Approx(a[0].weight).epsilon(1e-14));
  CHECK_THROWS_AS(update(two_equal(), [](const StateVec&) { return 0.0; }), DegenerateWeights);
  CHECK_THROWS_AS(update(two_equal(), [](const StateVec&) { return -1.0; }), InvalidArgument);
}

TEST_CASE("update is invariant to rescaling the potential") {
  Rng rng{RngStream(2)};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<StateVec> xs;
    for (int k = 0; k < 20; ++k) xs.push_back({rng.uniform(), rng.uniform()});
    const double scale = std::exp(rng.uniform(-10, 10));
    const PotentialFn g = [](const StateVec& s) { return 0.1 + s.x * s.y; };
    const PotentialFn gs = [&](const StateVec& s) { return scale * (0.1 + s.x * s.y); };
    const auto a = update(ParticleSet::uniform(xs), g);
    const auto b = update(ParticleSet::uniform(xs), gs);
    for (std::size_t k = 0; k < xs.size(); ++k) CHECK(a[k].weight == doctest::Approx(b[k].weight).epsilon(1e-12));
  }
}

TEST_CASE("residual_counts examples") {
  const std::vector<double> w{0.5, 0.3, 0.2};
  for (int i = 0; i < 100; ++i) {
    Rng rng{RngStream(3, i)};
    CHECK(residual_counts(w, 10, rng) == std::vector<std::size_t>{5, 3, 2});
  }
  const std::vector<double> w2{0.45, 0.35, 0.2};
  int first = 0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    Rng rng{RngStream(4, i)};
    const auto c = residual_counts(w2, 10, rng);
    const bool a = c == std::vector<std::size_t>{5, 3, 2};
    const bool b = c == std::vector<std::size_t>{4, 4, 2};
    REQUIRE((a || b));
    first += a;
  }
  CHECK(std::abs(first / double(reps) - 0.5) < 3 * std::sqrt(0.25 / reps));
}

TEST_CASE("residual deterministic part and unbiasedness") {
  Rng wr{RngStream(5)};
  std::vector<double> w(6);
  double tot = 0;
  for (auto& v : w) tot += v = wr.uniform();
  for (auto& v : w) v /= tot;
  const std::size_t n = 17;
  const int reps = 20000;
  std::vector<double> mean(w.size(), 0.0);
  Rng rng{RngStream(6)};
  for (int i = 0; i < reps; ++i) {
    const auto c = residual_counts(w, n, rng);
    std::size_t s = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      REQUIRE(c[k] >= static_cast<std::size_t>(std::floor(n * w[k])));
      mean[k] += double(c[k]);
      s += c[k];
    }
    REQUIRE(s == n);
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    // The residual part is at most multinomial; its variance bounds ours.
    const double sd = std::sqrt(n * w[k] * (1 - w[k]) / reps);
    CHECK(std::abs(mean[k] / reps - n * w[k]) < 3 * sd);
  }
}

TEST_CASE("multinomial examples") {
  Rng rng{RngStream(7)};
  const ParticleSet point({{{0.2, 0.3}, 1.0}, {{0.7, 0.7}, 0.0}, {{0.1, 0.1}, 0.0}});
  for (const auto& p : multinomial_resample(point, 25, rng)) CHECK(p.state == StateVec{0.2, 0.3});
  const std::vector<double> w(5, 0.2);
  std::vector<double> mean(5, 0.0);
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    const auto c = multinomial_counts(w, 5, rng);
    for (int k = 0; k < 5; ++k) mean[k] += double(c[k]);
  }
  for (int k = 0; k < 5; ++k) CHECK(std::abs(mean[k] / reps - 1.0) < 3 * std::sqrt(5 * 0.2 * 0.8 / reps));
}

TEST_CASE("filter_step examples") {
  DynamicsModel m;
  m.noise_amp = 0.0;
  std::vector<StateVec> xs(40, StateVec{0.5, 0.5});
  const auto out = filter_step(ParticleSet::uniform(xs), m, [](const StateVec&) { return 1.0; }, 40,
                               RngStream(8));
  CHECK(out.size() == 40);
  for (const auto& p : out) {
    CHECK(distance(p.state, {0.5, 0.5}) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(p.weight == 1.0 / 40);
  }

  // Deterministic detector: only particles inside the disk survive.
  NetworkTopology t;
  t.r_c = 1.0;
  t.leaders = {{0, {0.5, 0.5}, NodeKind::leader}};
  t.satellites = {{0, {0.3, 0.3}, NodeKind::satellite}};
  t.assign();
  const BinarySensorModel exact{0.15, 1.0, 0.0};
  Rng rng{RngStream(9)};
  std::vector<StateVec> cloud;
  for (int k = 0; k < 500; ++k) cloud.push_back({rng.uniform(), rng.uniform()});
  const auto pot = make_leader_potential(0, t, exact, {{0, true}});
  const auto f = filter_step(ParticleSet::uniform(cloud), DynamicsModel{}, pot, 200, RngStream(10));
  CHECK(f.size() == 200);
  for (const auto& p : f) CHECK(distance(p.state, {0.3, 0.3}) <= 0.15);
}

TEST_CASE("filter_step equals the manual composition") {
  Rng rng{RngStream(11)};
  std::vector<StateVec> cloud;
  for (int k = 0; k < 100; ++k) cloud.push_back({rng.uniform(), rng.uniform()});
  const auto set = ParticleSet::uniform(cloud);
  const PotentialFn g = [](const StateVec& s) { return 0.05 + s.x; };
  const RngStream s(12);
  const auto step = filter_step(set, DynamicsModel{}, g, 100, s);
  const auto predicted = predict(set, DynamicsModel{}, s.derive(0));
  Rng r(s.derive(1));
  const auto manual = residual_resample(update(predicted, g), 100, r);
  CHECK(step == manual);
}
