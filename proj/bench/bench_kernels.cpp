// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "fkpf/filter.hpp"
#include "fkpf/gml.hpp"
#include "fkpf/kernels.hpp"
#include "fkpf/leader.hpp"

using namespace fkpf;

namespace {

std::vector<Particle> cloud(std::size_t n) {
  Rng rng{RngStream(1)};
  std::vector<Particle> ps;
  for (std::size_t k = 0; k < n; ++k) ps.push_back({{rng.uniform(), rng.uniform()}, 1.0 / double(n)});
  return ps;
}

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_Propagate(benchmark::State& st) {
  auto ps = cloud(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    kernels::propagate(ps, DynamicsModel{}, RngStream(2), exec_of(st));
    benchmark::DoNotOptimize(ps.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Potential(benchmark::State& st) {
  const auto ps = cloud(static_cast<std::size_t>(st.range(0)));
  const auto net = generate_network(20, 200, RngStream(3));
  const BinarySensorModel model{connectivity_radius(200) / 2, 0.9, 0.05};
  std::vector<int> all;
  for (const auto& s : net.satellites) all.push_back(s.id);
  const std::vector<std::uint8_t> bits(200, 0);
  const LocalPotential pot(net, all, model, bits);
  std::vector<double> out(ps.size());
  for (auto _ : st) {
    kernels::evaluate_potential(ps, pot, out, exec_of(st));
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_PerSensorMi(benchmark::State& st) {
  const ParticleSet set(cloud(static_cast<std::size_t>(st.range(0))));
  const auto net = generate_network(20, 200, RngStream(4));
  const BinarySensorModel model{connectivity_radius(200) / 2, 0.9, 0.05};
  std::vector<StateVec> sensors;
  for (const auto& s : net.satellites) sensors.push_back(s.position);
  std::vector<double> out(sensors.size());
  for (auto _ : st) {
    kernels::per_sensor_mi(sensors, model, set, out, exec_of(st));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_FilterStep(benchmark::State& st) {
  const ParticleSet set(cloud(static_cast<std::size_t>(st.range(0))));
  const auto net = generate_network(20, 200, RngStream(5));
  const BinarySensorModel model{connectivity_radius(200) / 2, 0.9, 0.05};
  const std::vector<std::uint8_t> bits(200, 0);
  const LocalPotential pot(net, net.satellites_of(0), model, bits);
  for (auto _ : st) {
    benchmark::DoNotOptimize(filter_step(set, DynamicsModel{}, pot, set.size(), RngStream(6), exec_of(st)));
  }
}

void BM_GmlFit(benchmark::State& st) {
  const auto ps = cloud(static_cast<std::size_t>(st.range(0)));
  std::vector<StateVec> xs;
  for (const auto& p : ps) xs.push_back(p.state);
  GmlConfig cfg;
  cfg.N_p = 8;
  cfg.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(gml_fit(xs, cfg));
}

void args(benchmark::internal::Benchmark* b, std::initializer_list<int> sizes) {
  b->ArgNames({"n", "omp"});
  for (int n : sizes) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
}

}  // namespace

BENCHMARK(BM_Propagate)->Apply([](auto* b) { args(b, {300, 3000, 30000}); });
BENCHMARK(BM_Potential)->Apply([](auto* b) { args(b, {300, 3000, 30000}); });
BENCHMARK(BM_PerSensorMi)->Apply([](auto* b) { args(b, {300, 3000}); });
BENCHMARK(BM_FilterStep)->Apply([](auto* b) { args(b, {300, 3000}); });
BENCHMARK(BM_GmlFit)->Apply([](auto* b) { args(b, {300}); });

BENCHMARK_MAIN();
