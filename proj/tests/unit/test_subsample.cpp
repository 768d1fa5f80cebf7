#include <doctest.h>

#include <algorithm>
#include <map>

#include "fkpf/errors.hpp"
#include "fkpf/subsample.hpp"

using namespace fkpf;

namespace {
ParticleSet random_set(std::size_t n, std::uint64_t seed) {
  Rng rng{RngStream(seed)};
  std::vector<Particle> ps;
  double tot = 0;
  for (std::size_t k = 0; k < n; ++k) {
    ps.push_back({{rng.uniform(), rng.uniform()}, rng.uniform()});
    tot += ps.back().weight;
  }
  for (auto& p : ps) p.weight /= tot;
  return ParticleSet(ps);
}
const TestFunction hx{[](const StateVec& s) { return s.x; }, 1.0};
}  // namespace

TEST_CASE("subsample examples") {
  const auto set = random_set(30, 1);
  Rng rng{RngStream(2)};
  const auto same = subsample(set, 30, rng);
  CHECK(same.size() == 30);
  for (const auto& p : same) CHECK(p.weight == 1.0 / 30);
  const auto one = subsample(set, 1, rng);
  CHECK(one.size() == 1);
  CHECK(one[0].weight == 1.0);
  CHECK_THROWS_AS(subsample(set, 31, rng), InvalidArgument);
  CHECK_THROWS_AS(subsample(set, 0, rng), InvalidArgument);
}

TEST_CASE("replicate_upsample preserves the empirical measure") {
  std::vector<StateVec> xs{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}};
  const auto u = ParticleSet::uniform(xs);
  CHECK(replicate_upsample(u, 1) == u);

  Rng rng{RngStream(3)};
  const auto sub = subsample(random_set(300, 4), 30, rng);
  const auto up = replicate_upsample(sub, 10);
  CHECK(up.size() == 300);
  CHECK(apply_measure(up, hx) == doctest::Approx(apply_measure(sub, hx)).epsilon(1e-15));
  const TestFunction hy{[](const StateVec& s) { return s.y * s.y; }, 1.0};
  CHECK(apply_measure(up, hy) == doctest::Approx(apply_measure(sub, hy)).epsilon(1e-15));
}

TEST_CASE("subsample then replicate is unbiased") {
  const auto set = random_set(300, 5);
  const double target = apply_measure(set, hx);
  const int reps = 4000;
  double s = 0, s2 = 0;
  for (int i = 0; i < reps; ++i) {
    Rng rng{RngStream(6, i)};
    const double v = apply_measure(replicate_upsample(subsample(set, 10, rng), 30), hx);
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - target) < 3.5 * se);
}

TEST_CASE("resample_upsample and reconstruct") {
  const std::vector<StateVec> pt(4, StateVec{0.4, 0.4});
  Rng rng{RngStream(7)};
  for (const auto& p : resample_upsample(ParticleSet::uniform(pt), 4, rng)) CHECK(p.state == StateVec{0.4, 0.4});
  const auto sub = subsample(random_set(100, 8), 7, rng);
  const auto r1 = reconstruct(sub, 70, rng);
  CHECK(r1.path == UpsamplePath::replicate);
  CHECK(r1.set.size() == 70);
  const auto r2 = reconstruct(sub, 100, rng);
  CHECK(r2.path == UpsamplePath::resample);
  CHECK(r2.set.size() == 100);
  CHECK_THROWS_AS(resample_upsample(sub, 3, rng), InvalidArgument);
}

TEST_CASE("SubsampleConfig validation") {
  CHECK_NOTHROW((SubsampleConfig{300, 30, 10}.validate()));
  CHECK_THROWS_AS((SubsampleConfig{300, 30, 9}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SubsampleConfig{300, 301, std::nullopt}.validate()), InvalidArgument);
  CHECK(SubsampleConfig{300, 60, std::nullopt}.replication_factor() == 5u);
  CHECK_FALSE(SubsampleConfig{300, 70, std::nullopt}.replication_factor().has_value());
}
