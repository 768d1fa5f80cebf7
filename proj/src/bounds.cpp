#include "fkpf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fkpf/errors.hpp"

namespace fkpf::bounds {

namespace {

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

double root(double v, double p) { return std::pow(v, 1.0 / p); }

}  // namespace

void RegularityParams::validate() const {
  if (!(eps_M > 0.0 && eps_M <= 1.0)) throw InvalidArgument("eps_M must lie in (0,1]");
  if (!(eps_G > 0.0 && eps_G <= 1.0)) throw InvalidArgument("eps_G must lie in (0,1]");
  if (m < 1) throw InvalidArgument("m must be >= 1");
}

void BoundQuery::validate() const {
  if (N < 1 || N_b < 1) throw InvalidArgument("N and N_b must be >= 1");
  if (N_b > N) throw InvalidArgument("N_b must not exceed N");
  if (chi && *chi * N_b != N) throw InvalidArgument("chi * N_b must equal N");
  if (!(q_u >= 0.0 && q_u <= 1.0)) throw InvalidArgument("q_u must lie in [0,1]");
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
}

void ParametricBoundInputs::validate() const {
  if (!(a_u > 0.0 && a_u < b_u && std::isfinite(b_u))) {
    throw InvalidArgument("parametric bound: need 0 < a_u < b_u < inf");
  }
  if (N_p < 1) throw InvalidArgument("parametric bound: N_p must be >= 1");
  if (!(entropy_integral >= 0.0)) throw InvalidArgument("parametric bound: entropy_integral must be >= 0");
  if (!(universal_C > 0.0)) throw InvalidArgument("parametric bound: universal_C must be > 0");
}

double c_of_p(double p) {
  if (!(p >= 1.0)) throw InvalidArgument("c(p) requires p >= 1");
  if (p == 1.0) return 1.0;
  return std::pow(2.0, -p / 2.0) * p * std::tgamma(p / 2.0);
}

double dobrushin_bound(const RegularityParams& params, int horizon) {
  params.validate();
  if (horizon < 0) throw InvalidArgument("dobrushin_bound: horizon must be >= 0");
  const double contraction = 1.0 - params.eps_M * params.eps_M * std::pow(params.eps_G, params.m - 1);
  return std::pow(contraction, horizon / params.m);
}

double epsilon_um(const RegularityParams& params) {
  params.validate();
  const double m = params.m;
  return m * (2.0 - params.eps_M * std::pow(params.eps_G, m)) /
         (std::pow(params.eps_M, 3) * std::pow(params.eps_G, 2.0 * m - 1.0));
}

double lp_bound_standard(std::size_t N, double p, double eps_um) {
  return eps_um * root(c_of_p(p), p) / std::sqrt(static_cast<double>(N));
}

double lp_bound_subsample(const BoundQuery& query, double eps_um) {
  query.validate();
  if (!query.chi) throw InvalidArgument("lp_bound_subsample: chi must be set (N = chi N_b)");
  if (query.q_u > 2.0 / 3.0) {
    throw OutOfHypothesis("lp_bound_subsample: requires q_u <= 2/3");
  }
  const double p = query.p;
  const double chi = static_cast<double>(*query.chi);
  return lp_bound_standard(query.N, p, eps_um) *
         (root(query.q_u, p) * std::sqrt(chi) + root(1.0 - query.q_u, p));
}

double lp_bound_general(const BoundQuery& query, double eps_um) {
  query.validate();
  const double p = query.p;
  const double inv_n = 1.0 / std::sqrt(static_cast<double>(query.N));
  const double inv_nb = 1.0 / std::sqrt(static_cast<double>(query.N_b));
  return eps_um * root(c_of_p(p), p) *
         (root(query.q_u, p) * (inv_n + inv_nb) + root(1.0 - query.q_u, p) * inv_n);
}

double lp_bound_tight(const BoundQuery& query, double eps_um) {
  query.validate();
  if (!is_integer(query.p)) throw InvalidArgument("lp_bound_tight: p must be an integer");
  if (!query.chi) throw InvalidArgument("lp_bound_tight: chi must be set (N = chi N_b)");
  return lp_bound_standard(query.N, query.p, eps_um) *
         deterioration_factor(query.q_u, static_cast<double>(*query.chi), static_cast<int>(query.p));
}

ProbabilityBound exp_inequality(double epsilon, const BoundQuery& query, double eps_um) {
  query.validate();
  if (!(epsilon > 0.0)) throw InvalidArgument("exp_inequality: epsilon must be > 0");
  const double k = 4.0 * std::sqrt(2.0 * std::numbers::pi);
  auto term = [&](double n) {
    return (1.0 + k * epsilon * std::sqrt(n) / eps_um) *
           std::exp(-n * epsilon * epsilon / (2.0 * eps_um * eps_um));
  };
  const double raw = term(static_cast<double>(query.N)) + query.q_u * term(static_cast<double>(query.N_b));
  return {raw, std::clamp(raw, 0.0, 1.0)};
}

double mgf_bound(double epsilon, double sigma_h, std::size_t N, MgfForm form) {
  if (!(sigma_h > 0.0)) throw InvalidArgument("mgf_bound: sigma_h must be > 0");
  (void)N;
  const double es = epsilon * sigma_h;
  const double gauss = std::exp(es * es / 8.0);
  if (form == MgfForm::simple) return (1.0 + std::sqrt(2.0 * std::numbers::pi) * es) * gauss;
  const double r = std::sqrt(std::numbers::pi / 2.0);
  return 1.0 + es * (1.0 - r + r * gauss * (1.0 + std::erf(es / std::sqrt(8.0))));
}

double epsilon_parametric(double a_u, double b_u, double eps_G) {
  if (!(a_u > 0.0 && a_u < b_u)) throw InvalidArgument("epsilon_parametric: need 0 < a_u < b_u");
  const double r = a_u / b_u;
  return (2.0 - r * eps_G) / (r * r * r * eps_G);
}

double lp_bound_parametric(const BoundQuery& query, const ParametricBoundInputs& inputs,
                           double eps_G) {
  query.validate();
  inputs.validate();
  if (!(eps_G > 0.0 && eps_G <= 1.0)) throw InvalidArgument("eps_G must lie in (0,1]");
  const double p = query.p;
  const double sqrt_n = std::sqrt(static_cast<double>(query.N));
  const double ratio = inputs.b_u / inputs.a_u;
  // c() is only defined for arguments >= 1. For p < 2 the p = 2 value is
  // used; it dominates because L_p norms grow with p.
  const double half = std::max(p / 2.0, 1.0);
  const double sampling = 2.0 * std::pow(c_of_p(half), 1.0 / half) +
                          inputs.universal_C * std::tgamma(p / 4.0 + 1.0) * inputs.entropy_integral;
  const double inner = 16.0 / (inputs.a_u * sqrt_n) * sampling +
                       8.0 * std::log(3.0 * std::sqrt(std::numbers::e) * ratio) * ratio * ratio /
                           static_cast<double>(inputs.N_p);
  const double eps_u = epsilon_parametric(inputs.a_u, inputs.b_u, eps_G);
  return eps_u * (root(c_of_p(p), p) / sqrt_n + root(query.q_u, p) * std::sqrt(inner));
}

double deterioration_factor(double q_u, double chi, int p) {
  if (p < 1) throw InvalidArgument("deterioration_factor: p must be a positive integer");
  if (!(chi >= 1.0)) throw InvalidArgument("deterioration_factor: chi must be >= 1");
  if (!(q_u >= 0.0 && q_u <= 1.0)) throw InvalidArgument("deterioration_factor: q_u must lie in [0,1]");
  return std::pow(q_u * std::pow(chi, p / 2.0) + (1.0 - q_u), 1.0 / p);
}

}  // namespace fkpf::bounds
