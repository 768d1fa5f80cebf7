#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fkpf/bounds.hpp"
#include "fkpf/errors.hpp"

using namespace fkpf;
using namespace fkpf::bounds;

TEST_CASE("c_of_p") {
  CHECK(c_of_p(1) == 1.0);
  CHECK(c_of_p(2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c_of_p(3) == doctest::Approx(std::pow(2.0, -1.5) * 3 * 0.886226925452758).epsilon(1e-12));
  CHECK(c_of_p(3) == doctest::Approx(0.9400).epsilon(1e-4));
  // Piecewise: the gamma branch tends to sqrt(pi/2) as p -> 1+.
  CHECK(c_of_p(1 + 1e-9) == doctest::Approx(std::sqrt(std::numbers::pi / 2)).epsilon(1e-6));
  CHECK_THROWS_AS(c_of_p(0.5), InvalidArgument);
}

TEST_CASE("dobrushin_bound and epsilon_um") {
  CHECK(dobrushin_bound({0.5, 0.8, 2}, 0) == 1.0);
  CHECK(dobrushin_bound({0.5, 0.8, 2}, 4) == doctest::Approx(0.64).epsilon(1e-12));
  double prev = 2;
  for (int h = 0; h < 30; ++h) {
    const double v = dobrushin_bound({0.6, 0.7, 3}, h);
    CHECK(v <= prev);
    CHECK(v > 0);
    prev = v;
  }
  CHECK(epsilon_um({1, 1, 1}) == 1.0);
  CHECK(epsilon_um({0.5, 0.8, 1}) == doctest::Approx(16).epsilon(1e-12));
  for (double e = 0.9; e > 0.1; e -= 0.1) CHECK(epsilon_um({e - 0.05, 0.7, 2}) > epsilon_um({e, 0.7, 2}));
  CHECK_THROWS_AS(epsilon_um({0, 0.5, 1}), InvalidArgument);
}

TEST_CASE("lp_bound_subsample") {
  CHECK(lp_bound_subsample({400, 100, 4, 0.25, 1}, 16) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lp_bound_subsample({400, 100, 4, 0.0, 3}, 16) == lp_bound_standard(400, 3, 16));
  CHECK_THROWS_AS(lp_bound_subsample({400, 100, 4, 0.7, 2}, 16), OutOfHypothesis);
  CHECK_THROWS_AS(lp_bound_subsample({400, 100, std::nullopt, 0.2, 2}, 16), InvalidArgument);
  CHECK_THROWS_AS(lp_bound_subsample({400, 100, 3, 0.2, 2}, 16), InvalidArgument);
  double prev = 0;
  for (std::size_t chi : {1u, 2u, 4u, 5u, 10u}) {
    const double v = lp_bound_subsample({400, 400 / chi, chi, 0.3, 2}, 5);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("general and tight bounds against the subsample bound on a grid") {
  for (std::size_t N : {100u, 300u, 1200u}) {
    for (std::size_t chi : {1u, 2u, 3u, 4u, 5u, 10u}) {
      if (N % chi) continue;
      for (double q : {0.0, 0.1, 0.3, 0.6}) {
        for (double p : {1.0, 2.0, 3.0, 4.0}) {
          const BoundQuery bq{N, N / chi, chi, q, p};
          const double sub = lp_bound_subsample(bq, 3);
          CHECK(lp_bound_general(bq, 3) >= sub * (1 - 1e-12));
          if (p == 2.0) CHECK(lp_bound_tight(bq, 3) <= sub * (1 + 1e-12));
          if (N / chi < N) {
            BoundQuery bigger = bq;
            bigger.N = 2 * N;
            bigger.N_b = 2 * N / chi;
            CHECK(lp_bound_subsample(bigger, 3) <= sub);
            CHECK(lp_bound_general(bigger, 3) <= lp_bound_general(bq, 3));
          }
        }
      }
    }
  }
  CHECK(lp_bound_general({100, 50, std::nullopt, 0.0, 2}, 2) == doctest::Approx(lp_bound_standard(100, 2, 2)));
  CHECK(lp_bound_general({100, 100, std::nullopt, 1.0, 2}, 2) == doctest::Approx(2 * lp_bound_standard(100, 2, 2)));
  CHECK_THROWS_AS(lp_bound_tight({100, 10, 10, 0.1, 2.5}, 1), InvalidArgument);
}

TEST_CASE("deterioration factor") {
  CHECK(deterioration_factor(0.1, 10, 2) == doctest::Approx(std::sqrt(1.9)).epsilon(1e-14));
  CHECK(deterioration_factor(0.1, 10, 2) == doctest::Approx(1.3784).epsilon(1e-4));
  CHECK(deterioration_factor(0.0, 30, 2) == 1.0);
  for (double q : {0.0, 0.3, 1.0}) CHECK(deterioration_factor(q, 1, 3) == doctest::Approx(1.0));
  const BoundQuery bq{300, 30, 10, 0.1, 2};
  CHECK(lp_bound_tight(bq, 1) / lp_bound_standard(300, 2, 1) == doctest::Approx(std::sqrt(1.9)));
  CHECK(lp_bound_tight({300, 300, 1, 1.0, 2}, 1) == doctest::Approx(lp_bound_standard(300, 2, 1)));
}

TEST_CASE("exp_inequality") {
  const auto r = exp_inequality(1.0, {100, 25, 4, 0.5, 2}, 1.0);
  CHECK(r.raw == doctest::Approx(9.53e-5).epsilon(0.01));
  CHECK(r.clipped == r.raw);
  CHECK(exp_inequality(50.0, {100, 25, 4, 0.5, 2}, 1.0).raw < 1e-300);
  const auto big = exp_inequality(0.01, {100, 25, 4, 0.5, 2}, 1.0);
  CHECK(big.raw > 1.0);
  CHECK(big.clipped == 1.0);
  double prev = INFINITY;
  for (std::size_t N : {100u, 200u, 400u, 800u}) {
    const double v = exp_inequality(0.3, {N, 25, std::nullopt, 0.5, 2}, 1.0).raw;
    CHECK(v <= prev);
    prev = v;
  }
  CHECK_THROWS_AS(exp_inequality(0.0, {100, 25, 4, 0.5, 2}, 1.0), InvalidArgument);
}

TEST_CASE("mgf bounds") {
  CHECK(mgf_bound(0, 1, 10, MgfForm::exact) == 1.0);
  CHECK(mgf_bound(0, 1, 10, MgfForm::simple) == 1.0);
  CHECK(mgf_bound(1, 1, 10, MgfForm::simple) == doctest::Approx(3.973).epsilon(1e-3));
  for (double e = 0.01; e <= 10.0; e += 0.01) {
    CHECK(mgf_bound(e, 1, 10, MgfForm::exact) <= mgf_bound(e, 1, 10, MgfForm::simple));
  }
  CHECK_THROWS_AS(mgf_bound(1, 0, 10, MgfForm::exact), InvalidArgument);
}

TEST_CASE("parametric bound") {
  const ParametricBoundInputs in{0.5, 2.0, 8, 1.0, 1.0};
  CHECK(epsilon_parametric(0.5, 2.0, 0.8) == doctest::Approx(144).epsilon(1e-12));
  CHECK(lp_bound_parametric({400, 400, std::nullopt, 0.25, 2}, in, 0.8) == doctest::Approx(528.3).epsilon(2e-4));
  CHECK(lp_bound_parametric({400, 400, std::nullopt, 0.0, 2}, in, 0.8) ==
        doctest::Approx(144 * lp_bound_standard(400, 2, 1)));
  double prev = INFINITY;
  for (std::size_t np : {1u, 2u, 4u, 8u, 16u}) {
    ParametricBoundInputs i = in;
    i.N_p = np;
    const double v = lp_bound_parametric({400, 400, std::nullopt, 0.25, 2}, i, 0.8);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS((lp_bound_parametric({400, 400, std::nullopt, 0.25, 2}, {2.0, 0.5, 8, 1, 1}, 0.8)), InvalidArgument);
}

TEST_CASE("all bounds are positive and non-increasing in N") {
  for (double p : {1.0, 2.0, 4.0}) {
    double a = INFINITY, b = INFINITY, c = INFINITY;
    for (std::size_t N : {60u, 120u, 240u, 480u}) {
      const BoundQuery q{N, N / 6, 6, 0.2, p};
      const double va = lp_bound_subsample(q, 4), vb = lp_bound_general(q, 4), vc = lp_bound_tight(q, 4);
      CHECK(va > 0);
      CHECK(va <= a);
      CHECK(vb <= b);
      CHECK(vc <= c);
      a = va;
      b = vb;
      c = vc;
    }
  }
}
