#include "fkpf/gml.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace fkpf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

StateVec clamp_var(StateVec v, const GmlConfig& cfg) {
  return {std::clamp(v.x, cfg.var_floor, cfg.var_ceiling),
          std::clamp(v.y, cfg.var_floor, cfg.var_ceiling)};
}

StateVec sample_mean(std::span<const StateVec> xs) {
  StateVec m;
  for (const auto& x : xs) m = m + x;
  return (1.0 / static_cast<double>(xs.size())) * m;
}

StateVec sample_var(std::span<const StateVec> xs, StateVec around) {
  StateVec v;
  for (const auto& x : xs) {
    v.x += (x.x - around.x) * (x.x - around.x);
    v.y += (x.y - around.y) * (x.y - around.y);
  }
  return (1.0 / static_cast<double>(xs.size())) * v;
}

// Second moments of the k samples nearest to `center`.
StateVec local_moments(std::span<const StateVec> xs, StateVec center, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) d[j] = {squared_norm(xs[j] - center), j};
  k = std::min(k, xs.size());
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  StateVec v;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& x = xs[d[i].second];
    v.x += (x.x - center.x) * (x.x - center.x);
    v.y += (x.y - center.y) * (x.y - center.y);
  }
  return (1.0 / static_cast<double>(k)) * v;
}

std::vector<double> alpha_candidates(const GmlConfig& cfg, std::size_t new_count) {
  std::vector<double> grid = cfg.alpha_grid;
  if (cfg.li_barron_alpha) grid.push_back(2.0 / (static_cast<double>(new_count) + 1.0));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<GaussianComponent> candidate_components(std::span<const StateVec> xs,
                                                    std::span<const double> current,
                                                    const GmlConfig& cfg) {
  const std::size_t n = xs.size();
  const std::size_t m = std::min(cfg.max_candidates, n);
  std::vector<GaussianComponent> out;
  if (cfg.init_strategy == InitStrategy::sample_moments) {
    std::vector<StateVec> means;
    for (std::size_t c = 0; c < m; ++c) means.push_back(xs[(c * n) / m]);
    means.push_back(sample_mean(xs));
    const std::size_t k = std::clamp<std::size_t>(n / std::max<std::size_t>(cfg.N_p, 1), 5, n);
    for (const auto& mu : means) {
      const StateVec local = local_moments(xs, mu, k);
      out.push_back({mu, clamp_var(local, cfg)});
      out.push_back({mu, clamp_var(0.25 * local, cfg)});
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return current[a] < current[b]; });
    const StateVec v = clamp_var(
        (1.0 / static_cast<double>(std::max<std::size_t>(cfg.N_p, 1))) * sample_var(xs, sample_mean(xs)),
        cfg);
    for (std::size_t c = 0; c < m; ++c) out.push_back({xs[order[c]], v});
  }
  return out;
}

struct Scored {
  GaussianComponent theta;
  double alpha = 0.0;
  double loglik = kNegInf;
};

Scored score_candidate(std::span<const StateVec> xs, std::span<const double> current,
                       const GaussianComponent& theta, std::span<const double> alphas) {
  std::vector<double> phi(xs.size());
  std::vector<double> ll(alphas.size());
  kernels::component_pdf(xs, theta, phi, Exec::serial);
  kernels::two_mixture_loglik(current, phi, alphas, ll, Exec::serial);
  Scored best{theta, 0.0, kNegInf};
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (ll[a] > best.loglik) best = {theta, alphas[a], ll[a]};
  }
  return best;
}

double loglik_at(std::span<const StateVec> xs, std::span<const double> current,
                 const GaussianComponent& theta, double alpha) {
  double acc = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    acc += std::log((1.0 - alpha) * current[j] + alpha * theta.pdf(xs[j]));
  }
  return acc;
}

// Coordinate search over (mean x, mean y, log var x, log var y, alpha).
Scored refine(std::span<const StateVec> xs, std::span<const double> current, Scored start,
              const GmlConfig& cfg) {
  std::array<double, 5> p{start.theta.mean.x, start.theta.mean.y, std::log(start.theta.var.x),
                          std::log(start.theta.var.y), start.alpha};
  std::array<double, 5> step{0.5 * std::sqrt(start.theta.var.x), 0.5 * std::sqrt(start.theta.var.y),
                             0.7, 0.7, 0.1};
  const double lo_var = std::log(cfg.var_floor);
  const double hi_var = std::log(cfg.var_ceiling);
  auto unpack = [&](const std::array<double, 5>& q) {
    GaussianComponent c{{q[0], q[1]},
                        {std::exp(std::clamp(q[2], lo_var, hi_var)),
                         std::exp(std::clamp(q[3], lo_var, hi_var))}};
    return std::pair{c, std::clamp(q[4], 1e-3, 1.0)};
  };
  double best = start.loglik;
  for (int it = 0; it < cfg.local_steps; ++it) {
    for (std::size_t d = 0; d < p.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        auto q = p;
        q[d] += sign * step[d];
        auto [c, a] = unpack(q);
        const double v = loglik_at(xs, current, c, a);
        if (v > best) {
          best = v;
          p = q;
          break;
        }
      }
    }
    for (auto& s : step) s *= 0.5;
  }
  auto [c, a] = unpack(p);
  return {c, a, best};
}

}  // namespace

std::vector<double> GmlConfig::default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
  return grid;
}

void GmlConfig::validate() const {
  if (N_p < 1) throw InvalidArgument("gml: N_p must be >= 1");
  if (alpha_grid.empty()) throw InvalidArgument("gml: alpha_grid must be non-empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("gml: alpha values must lie in (0,1]");
  }
  if (!(var_floor > 0.0 && var_floor < var_ceiling)) {
    throw InvalidArgument("gml: need 0 < var_floor < var_ceiling");
  }
  if (local_steps < 0) throw InvalidArgument("gml: local_steps must be >= 0");
  if (em_steps < 0) throw InvalidArgument("gml: em_steps must be >= 0");
  if (max_candidates < 1) throw InvalidArgument("gml: max_candidates must be >= 1");
}

void MixtureModel::validate() const {
  if (entries.empty()) throw InvalidArgument("mixture: needs at least one component");
  double total = 0.0;
  for (const auto& e : entries) {
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw InvalidArgument("mixture: weights must be finite and non-negative");
    }
    if (!(e.component.var.x > 0.0 && e.component.var.y > 0.0)) {
      throw InvalidArgument("mixture: variances must be positive");
    }
    total += e.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("mixture: weights must sum to 1");
}

double mixture_logpdf(const MixtureModel& model, const StateVec& x) {
  double top = kNegInf;
  for (const auto& e : model.entries) {
    if (e.weight > 0.0) top = std::max(top, std::log(e.weight) + e.component.log_pdf(x));
  }
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (const auto& e : model.entries) {
    if (e.weight > 0.0) acc += std::exp(std::log(e.weight) + e.component.log_pdf(x) - top);
  }
  return top + std::log(acc);
}

double sample_loglik(const MixtureModel& model, std::span<const StateVec> samples) {
  double acc = 0.0;
  for (const auto& x : samples) acc += mixture_logpdf(model, x);
  return acc;
}

MixtureModel add_component(const MixtureModel& current, const GaussianComponent& theta,
                           double alpha) {
  MixtureModel next = current;
  for (auto& e : next.entries) e.weight *= (1.0 - alpha);
  next.entries.push_back({alpha, theta});
  return next;
}

MixtureModel moment_match(std::span<const StateVec> samples, const GmlConfig& config) {
  if (samples.empty()) throw InvalidArgument("moment_match: no samples");
  const StateVec mu = sample_mean(samples);
  return MixtureModel{{{1.0, {mu, clamp_var(sample_var(samples, mu), config)}}}};
}

TwoComponentResult two_component_step(const MixtureModel& current,
                                      std::span<const StateVec> samples, const GmlConfig& config) {
  if (samples.empty()) throw InvalidArgument("two_component_step: empty sample");
  config.validate();

  std::vector<double> g(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) g[j] = std::exp(mixture_logpdf(current, samples[j]));
  double baseline = 0.0;
  for (double v : g) baseline += std::log(v);

  const auto alphas = alpha_candidates(config, current.size() + 1);
  const auto candidates = candidate_components(samples, g, config);
  std::vector<Scored> scored(candidates.size());
  const auto nc = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic) if (config.exec == Exec::parallel)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    scored[static_cast<std::size_t>(c)] = score_candidate(samples, g, candidates[c], alphas);
  }

  Scored best;
  for (const auto& s : scored) {
    if (s.loglik > best.loglik) best = s;
  }
  if (config.local_steps > 0 && best.loglik > kNegInf) best = refine(samples, g, best, config);

  TwoComponentResult out;
  out.baseline_loglik = baseline;
  if (best.loglik > baseline) {
    out.theta = best.theta;
    out.alpha = best.alpha;
    out.loglik = best.loglik;
  } else {
    out.theta = candidates.empty() ? current.entries.front().component : candidates.front();
    out.alpha = 0.0;
    out.loglik = baseline;
  }
  return out;
}

MixtureModel em_polish(const MixtureModel& model, std::span<const StateVec> samples,
                       const GmlConfig& config) {
  const std::size_t n = samples.size();
  const std::size_t k = model.size();
  MixtureModel best = model;
  double best_ll = sample_loglik(model, samples);
  std::vector<double> resp(n * k);
  for (int it = 0; it < config.em_steps; ++it) {
    for (std::size_t j = 0; j < n; ++j) {
      double top = kNegInf;
      for (std::size_t c = 0; c < k; ++c) {
        const auto& e = best.entries[c];
        const double v = e.weight > 0.0 ? std::log(e.weight) + e.component.log_pdf(samples[j]) : kNegInf;
        resp[j * k + c] = v;
        top = std::max(top, v);
      }
      double tot = 0.0;
      for (std::size_t c = 0; c < k; ++c) tot += resp[j * k + c] = std::exp(resp[j * k + c] - top);
      for (std::size_t c = 0; c < k; ++c) resp[j * k + c] /= tot;
    }
    MixtureModel next = best;
    for (std::size_t c = 0; c < k; ++c) {
      double w = 0.0;
      StateVec mu;
      for (std::size_t j = 0; j < n; ++j) {
        w += resp[j * k + c];
        mu = mu + resp[j * k + c] * samples[j];
      }
      auto& e = next.entries[c];
      e.weight = w / static_cast<double>(n);
      if (w < 1e-12) continue;
      mu = (1.0 / w) * mu;
      StateVec var;
      for (std::size_t j = 0; j < n; ++j) {
        const StateVec d = samples[j] - mu;
        var.x += resp[j * k + c] * d.x * d.x;
        var.y += resp[j * k + c] * d.y * d.y;
      }
      e.component = {mu, clamp_var((1.0 / w) * var, config)};
    }
    double total = 0.0;
    for (const auto& e : next.entries) total += e.weight;
    for (auto& e : next.entries) e.weight /= total;
    const double ll = sample_loglik(next, samples);
    if (!(ll > best_ll)) break;
    const bool converged = ll - best_ll < 1e-10 * std::abs(best_ll);
    best = std::move(next);
    best_ll = ll;
    if (converged) break;
  }
  return best;
}

GmlTrace gml_fit_traced(std::span<const StateVec> samples, const GmlConfig& config) {
  if (samples.size() < 2) throw InvalidArgument("gml_fit: need at least 2 samples");
  config.validate();
  GmlTrace trace;
  trace.model = moment_match(samples, config);
  trace.loglik.push_back(sample_loglik(trace.model, samples));
  while (trace.model.size() < config.N_p) {
    const auto step = two_component_step(trace.model, samples, config);
    trace.model = add_component(trace.model, step.theta, step.alpha);
    if (config.em_steps > 0) trace.model = em_polish(trace.model, samples, config);
    trace.loglik.push_back(sample_loglik(trace.model, samples));
  }
  return trace;
}

MixtureModel gml_fit(std::span<const StateVec> samples, const GmlConfig& config) {
  return gml_fit_traced(samples, config).model;
}

ParticleSet sample_mixture(const MixtureModel& model, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("sample_mixture: n must be >= 1");
  model.validate();
  std::vector<double> cdf;
  double acc = 0.0;
  for (const auto& e : model.entries) cdf.push_back(acc += e.weight);
  std::vector<StateVec> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    while (model.entries[k].weight <= 0.0 && k > 0) --k;
    const auto& c = model.entries[k].component;
    const double zx = rng.normal();
    const double zy = rng.normal();
    draws.push_back({c.mean.x + std::sqrt(c.var.x) * zx, c.mean.y + std::sqrt(c.var.y) * zy});
  }
  return ParticleSet::uniform(draws);
}

namespace {

McEstimate mean_and_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n)};
}

}  // namespace

McEstimate kl_divergence_mc(const LogDensity& f_logpdf, const Sampler& f_sampler,
                            const MixtureModel& g, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("kl_divergence_mc: n must be >= 1");
  std::vector<double> terms(n);
  for (auto& t : terms) {
    const StateVec x = f_sampler(rng);
    t = f_logpdf(x) - mixture_logpdf(g, x);
  }
  return mean_and_error(terms);
}

McEstimate l1_distance_mc(const LogDensity& f_logpdf, const Sampler& f_sampler,
                          const MixtureModel& g, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("l1_distance_mc: n must be >= 1");
  std::vector<double> terms(n);
  for (auto& t : terms) {
    const StateVec x = f_sampler(rng);
    t = std::abs(1.0 - std::exp(mixture_logpdf(g, x) - f_logpdf(x)));
  }
  return mean_and_error(terms);
}

DensityBounds density_bounds(const MixtureModel& model) {
  DensityBounds b{0.0, 0.0, std::numeric_limits<double>::infinity(), kNegInf};
  for (const auto& e : model.entries) {
    if (e.weight <= 0.0) continue;
    const auto& c = e.component;
    const StateVec nearest{std::clamp(c.mean.x, 0.0, 1.0), std::clamp(c.mean.y, 0.0, 1.0)};
    const StateVec farthest{c.mean.x < 0.5 ? 1.0 : 0.0, c.mean.y < 0.5 ? 1.0 : 0.0};
    b.log_sup = std::max(b.log_sup, c.log_pdf(nearest));
    b.log_inf = std::min(b.log_inf, c.log_pdf(farthest));
  }
  b.inf = std::exp(b.log_inf);
  b.sup = std::exp(b.log_sup);
  return b;
}

nlohmann::json to_json(const MixtureModel& model) {
  auto arr = nlohmann::json::array();
  for (const auto& e : model.entries) {
    arr.push_back({{"weight", e.weight},
                   {"mean", {e.component.mean.x, e.component.mean.y}},
                   {"var", {e.component.var.x, e.component.var.y}}});
  }
  return arr;
}

MixtureModel mixture_from_json(const nlohmann::json& doc) {
  MixtureModel m;
  try {
    for (const auto& e : doc) {
      const auto mean = e.at("mean").get<std::vector<double>>();
      const auto var = e.at("var").get<std::vector<double>>();
      if (mean.size() != 2 || var.size() != 2) throw InvalidArgument("mixture: mean/var need 2 entries");
      m.entries.push_back({e.at("weight").get<double>(), {{mean[0], mean[1]}, {var[0], var[1]}}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("mixture: malformed document: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace fkpf
