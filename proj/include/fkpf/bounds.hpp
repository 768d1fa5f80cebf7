#pragma once

#include <optional>
#include <string>

namespace fkpf::bounds {

/// Mixing constants: (M) with eps_M over m steps, (G) with eps_G.
struct RegularityParams {
  double eps_M = 0.5;
  double eps_G = 0.8;
  int m = 1;

  void validate() const;
};

struct BoundQuery {
  std::size_t N = 300;
  std::size_t N_b = 300;
  std::optional<std::size_t> chi;
  double q_u = 0.0;
  double p = 2.0;

  void validate() const;
};

/// Inputs of the parametric (mixture hand-off) bound. The packing-number
/// entropy integral and the universal constant cannot be derived from
/// the model and are supplied by the caller.
struct ParametricBoundInputs {
  double a_u = 0.5;
  double b_u = 2.0;
  std::size_t N_p = 8;
  double entropy_integral = 1.0;
  double universal_C = 1.0;

  void validate() const;
};

/// 1 for p = 1, 2^{-p/2} p Gamma(p/2) for p > 1.
double c_of_p(double p);

/// (1 - eps_M^2 eps_G^{m-1})^{floor(horizon/m)}.
double dobrushin_bound(const RegularityParams& params, int horizon);

/// m (2 - eps_M eps_G^m) / (eps_M^3 eps_G^{2m-1}).
double epsilon_um(const RegularityParams& params);

/// Standard particle filter L_p bound eps_um c(p)^{1/p} / sqrt(N).
double lp_bound_standard(std::size_t N, double p, double eps_um);

/// Subsampling with replication (N = chi N_b). Requires q_u <= 2/3.
double lp_bound_subsample(const BoundQuery& query, double eps_um);

/// Subsampling with any N_b < N (reconstruction by resampling).
double lp_bound_general(const BoundQuery& query, double eps_um);

/// Tighter replication bound for integer p.
double lp_bound_tight(const BoundQuery& query, double eps_um);

struct ProbabilityBound {
  double raw = 0.0;
  double clipped = 0.0;  // raw clipped to [0, 1]
};

/// Tail probability bound P(|error| >= epsilon).
ProbabilityBound exp_inequality(double epsilon, const BoundQuery& query, double eps_um);

enum class MgfForm { exact, simple };

/// Bound on E exp(epsilon sqrt(N) |m(X)(h)|) for centred h with
/// oscillation sigma_h. N enters only through the scaling.
double mgf_bound(double epsilon, double sigma_h, std::size_t N, MgfForm form);

/// (2 - r eps_G) / (r^3 eps_G) with r = a_u / b_u.
double epsilon_parametric(double a_u, double b_u, double eps_G);

double lp_bound_parametric(const BoundQuery& query, const ParametricBoundInputs& inputs,
                           double eps_G);

/// (q_u chi^{p/2} + 1 - q_u)^{1/p}: ratio of the intermittent
/// approximation bound to the standard filter bound.
double deterioration_factor(double q_u, double chi, int p);

}  // namespace fkpf::bounds
