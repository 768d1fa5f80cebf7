#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fkpf/bounds.hpp"
#include "fkpf/errors.hpp"
#include "fkpf/experiments.hpp"

using namespace fkpf;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// ------------------------------------------------------------------ run

int cmd_run(const fs::path& config_path, const fs::path& out_dir, int threads,
            const std::string& cache_dir) {
  const auto config = config_from_json(read_json(config_path));
  std::optional<RunCache> cache;
  MonteCarloOptions opts;
  opts.threads = threads;
  if (!cache_dir.empty()) {
    cache.emplace(cache_dir);
    opts.cache = &*cache;
  }
  const auto metrics = run_monte_carlo(config, opts);
  emit_results(metrics, out_dir);
  open_out(out_dir / "config.json") << to_json(config).dump(2) << "\n";
  open_out(out_dir / "topology.json") << to_json(config.network()).dump(2) << "\n";

  const std::size_t T = metrics.rmse.size() - 1;
  std::cout << "mode " << to_string(config.mode) << ", " << metrics.deterioration_ratio.size()
            << " trials (" << metrics.excluded_trials << " excluded)\n"
            << "final-quarter RMSE " << window_rms(metrics.rmse, T - T / 4 + 1, T + 1) << "\n"
            << "median deterioration " << metrics.deterioration.median << ", empirical q "
            << metrics.empirical_q << "\n"
            << "results in " << out_dir.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ bounds

struct BoundRow {
  std::string name;
  bounds::BoundQuery q;
  std::string extra;
  std::optional<double> value;
  bool hypothesis = true;
  std::string note;
};

double eps_um_from(const nlohmann::json& doc, std::string& note) {
  if (doc.contains("eps_um")) return doc["eps_um"].get<double>();
  if (doc.contains("regularity")) {
    const auto& r = doc["regularity"];
    bounds::RegularityParams p{r.at("eps_M").get<double>(), r.at("eps_G").get<double>(), r.value("m", 1)};
    return bounds::epsilon_um(p);
  }
  note = "eps_um defaulted to 1";
  return 1.0;
}

int cmd_bounds(const fs::path& params_path, const fs::path& out_path) {
  const auto doc = read_json(params_path);
  std::string eps_note;
  const double eps_um = eps_um_from(doc, eps_note);
  std::vector<BoundRow> rows;
  std::vector<double> epsilons;
  if (doc.contains("epsilon")) epsilons = doc["epsilon"].get<std::vector<double>>();

  try {
    for (const auto& jq : doc.at("queries")) {
      bounds::BoundQuery q;
      q.N = jq.at("N").get<std::size_t>();
      q.N_b = jq.value("N_b", q.N);
      if (jq.contains("chi")) q.chi = jq["chi"].get<std::size_t>();
      q.q_u = jq.value("q_u", 0.0);
      q.p = jq.value("p", 2.0);
      q.validate();
      const bool integer_p = std::floor(q.p) == q.p;

      rows.push_back({"standard", q, "", bounds::lp_bound_standard(q.N, q.p, eps_um), true, eps_note});
      if (q.chi) {
        BoundRow r{"subsample", q, "", std::nullopt, q.q_u <= 2.0 / 3.0, eps_note};
        if (r.hypothesis) r.value = bounds::lp_bound_subsample(q, eps_um);
        else r.note = "q_u > 2/3";
        rows.push_back(r);
        if (integer_p) {
          rows.push_back({"tight", q, "", bounds::lp_bound_tight(q, eps_um), true, eps_note});
          rows.push_back({"deterioration_factor", q, "",
                          bounds::deterioration_factor(q.q_u, double(*q.chi), int(q.p)), true, ""});
        }
      }
      rows.push_back({"general", q, "", bounds::lp_bound_general(q, eps_um), true, eps_note});
      for (double e : epsilons) {
        const auto pb = bounds::exp_inequality(e, q, eps_um);
        rows.push_back({"exp_inequality_raw", q, "epsilon=" + format_double(e), pb.raw, true, eps_note});
        rows.push_back({"exp_inequality", q, "epsilon=" + format_double(e), pb.clipped, true, eps_note});
      }
      if (doc.contains("parametric")) {
        const auto& jp = doc["parametric"];
        bounds::ParametricBoundInputs in;
        in.a_u = jp.at("a_u").get<double>();
        in.b_u = jp.at("b_u").get<double>();
        in.N_p = jp.at("N_p").get<std::size_t>();
        std::string note;
        if (jp.contains("entropy_integral")) in.entropy_integral = jp["entropy_integral"].get<double>();
        else note += "entropy_integral defaulted to 1 (not derived from the model); ";
        if (jp.contains("universal_C")) in.universal_C = jp["universal_C"].get<double>();
        else note += "universal_C defaulted to 1 (not derived from the model)";
        const double eps_G = jp.at("eps_G").get<double>();
        rows.push_back({"parametric", q, "N_p=" + std::to_string(in.N_p),
                        bounds::lp_bound_parametric(q, in, eps_G), true, note});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(params_path.string() + ": " + e.what());
  }

  auto out = open_out(out_path);
  out << "bound,N,N_b,chi,q_u,p,extra,eps_um,value,hypothesis_ok,note\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.q.N << ',' << r.q.N_b << ',' << (r.q.chi ? std::to_string(*r.q.chi) : "")
        << ',' << format_double(r.q.q_u) << ',' << format_double(r.q.p) << ',' << r.extra << ','
        << format_double(eps_um) << ',' << (r.value ? format_double(*r.value) : "") << ','
        << int(r.hypothesis) << ',' << r.note << "\n";
  }
  std::cout << rows.size() << " bound rows written to " << out_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const std::string& suite, const fs::path& out_path, std::size_t reps, std::uint64_t seed) {
  auto out = open_out(out_path);
  int failures = 0;
  if (suite == "lemma1") {
    out << "distribution,N,p,reps,empirical,bound,pass\n";
    int k = 0;
    for (const auto& d : {uniform_distribution(), two_point_distribution(), truncated_gaussian_distribution()}) {
      for (double p : {1.0, 2.0, 3.0, 4.0}) {
        for (std::size_t N : {25u, 100u, 400u}) {
          const auto r = verify_lemma1(d, N, p, reps, RngStream(seed, k++));
          failures += !r.pass;
          out << d.name << ',' << N << ',' << format_double(p) << ',' << reps << ','
              << format_double(r.empirical) << ',' << format_double(r.bound) << ',' << int(r.pass) << "\n";
        }
      }
    }
  } else if (suite == "mgf") {
    out << "distribution,N,epsilon,reps,empirical,exact_bound,simple_bound,pass\n";
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(0.1 * i);
    int k = 0;
    for (const auto& [d, N] : std::vector<std::pair<TestDistribution, std::size_t>>{
             {uniform_distribution(), 100}, {two_point_distribution(), 100},
             {truncated_gaussian_distribution(), 100}, {rademacher_distribution(), 50}}) {
      for (const auto& r : verify_mgf(d, N, grid, reps, RngStream(seed, k++))) {
        failures += !r.pass;
        out << d.name << ',' << N << ',' << format_double(r.epsilon) << ',' << reps << ','
            << format_double(r.empirical) << ',' << format_double(r.exact_bound) << ','
            << format_double(r.simple_bound) << ',' << int(r.pass) << "\n";
      }
    }
  } else {
    throw InvalidArgument("unknown suite '" + suite + "' (expected lemma1 or mgf)");
  }
  std::cout << suite << ": " << failures << " failing rows; table in " << out_path.string() << "\n";
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader-node particle filtering experiments and bounds"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a Monte Carlo tracking experiment");
  std::string config_path, out_dir, cache_dir;
  int threads = 0;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads (0: OpenMP default)");
  run->add_option("--cache", cache_dir, "Directory caching baseline and reference runs");

  auto* bnd = app.add_subcommand("bounds", "Evaluate closed-form error bounds");
  std::string params_path, bounds_out;
  bnd->add_option("--params", params_path, "Bound parameters (JSON)")->required()->check(CLI::ExistingFile);
  bnd->add_option("--out", bounds_out, "Output CSV")->required();

  auto* ver = app.add_subcommand("verify", "Empirically check the concentration bounds");
  std::string suite, verify_out;
  std::size_t reps = 0;
  std::uint64_t seed = 1;
  ver->add_option("--suite", suite, "lemma1 or mgf")->required()->check(CLI::IsMember({"lemma1", "mgf"}));
  ver->add_option("--out", verify_out, "Output CSV")->required();
  ver->add_option("--reps", reps, "Repetitions (default 10000 for lemma1, 100000 for mgf)");
  ver->add_option("--seed", seed, "Random seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, out_dir, threads, cache_dir);
    if (*bnd) return cmd_bounds(params_path, bounds_out);
    if (*ver) return cmd_verify(suite, verify_out, reps ? reps : (suite == "mgf" ? 100000 : 10000), seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
