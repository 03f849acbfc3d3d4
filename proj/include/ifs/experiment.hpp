#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ifs/serialization.hpp"
#include "ifs/version.hpp"

namespace ifs {

// ---------------------------------------------------------------------------
// Run plumbing

enum class ExitStatus : int {
  Ok = 0,
  VerdictFailed = 1,
  BadConfig = 2,
  PreconditionViolated = 3,
  InvariantBreached = 4,
};

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> grid_override;
  std::optional<long long> horizon_override;
};

struct RunOutcome {
  ExitStatus status = ExitStatus::Ok;
  json report;
  std::string message;  // populated on errors
};

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << body;
  }
  std::filesystem::rename(tmp, path);
}

inline const json& require_field(const json& cfg, const char* name) {
  if (!cfg.contains(name)) throw ConfigError(std::string("config needs field '") + name + "'");
  return cfg.at(name);
}

inline double require_number(const json& cfg, const char* name) {
  const json& v = require_field(cfg, name);
  if (!v.is_number()) throw ConfigError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

inline std::pair<long long, long long> parse_window(const json& cfg) {
  const json& w = require_field(cfg, "window");
  if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer())
    throw ConfigError("'window' must be [lo, hi] with integers");
  const long long lo = w[0].get<long long>(), hi = w[1].get<long long>();
  if (lo > 0 || hi < 0 || lo > hi) throw ConfigError("'window' must satisfy lo <= 0 <= hi");
  return {lo, hi};
}

inline std::function<double(long long)> parse_profile(const json& cfg) {
  const json& p = require_field(cfg, "profile");
  const std::string kind = p.value("kind", "");
  if (kind == "geometric") {
    const double base = p.value("base", 0.0), ratio = p.value("ratio", 0.5);
    if (base < 0.0 || ratio <= 0.0 || ratio >= 1.0)
      throw ConfigError("geometric profile needs base >= 0 and ratio in (0, 1)");
    return [base, ratio](long long i) { return base * std::pow(ratio, static_cast<double>(i)); };
  }
  if (kind == "constant") {
    const double v = p.value("value", 0.0);
    if (v < 0.0) throw ConfigError("constant profile needs value >= 0");
    return [v](long long) { return v; };
  }
  if (kind == "zero") return [](long long) { return 0.0; };
  throw ConfigError("profile kind must be geometric, constant or zero");
}

}  // namespace detail

/// Documentation of the config schema printed by the `schema` subcommand.
std::string config_schema_text();

// ---------------------------------------------------------------------------
// Experiment implementations

namespace detail {

struct RunContext {
  System sys;
  json cfg;
  std::uint64_t seed = 0;
  std::size_t grid_n = 100000;
  long long horizon = 40;
  std::optional<std::filesystem::path> out;
};

inline PseudoOrbit config_pseudo_orbit(const RunContext& ctx, Rng& rng) {
  if (ctx.cfg.contains("points")) {
    if (!ctx.cfg.contains("sigma")) throw ConfigError("explicit 'points' need a 'sigma' word");
    PseudoOrbit po;
    po.base = ctx.cfg.value("base", 0LL);
    po.sigma = word_from_json(ctx.cfg.at("sigma"));
    po.delta = require_number(ctx.cfg, "delta");
    for (const auto& p : ctx.cfg.at("points")) po.points.push_back(point_from_json(ctx.sys.space, p));
    if (po.points.empty()) throw ConfigError("'points' must be nonempty");
    return po;
  }
  const auto [lo, hi] = parse_window(ctx.cfg);
  const double delta = require_number(ctx.cfg, "delta");
  const Point x0 = ctx.cfg.contains("x0") ? point_from_json(ctx.sys.space, ctx.cfg.at("x0"))
                                          : random_point(ctx.sys.space, rng);
  const SymbolWord sigma = ctx.cfg.contains("sigma")
                               ? word_from_json(ctx.cfg.at("sigma"))
                               : random_word(ctx.sys, lo, static_cast<std::size_t>(hi - lo + 1), rng);
  return generate_pseudo_orbit(ctx.sys, x0, sigma, lo, hi, delta, rng);
}

inline ExpansionReport config_constants(const RunContext& ctx) {
  ExpansionReport constants = expansion_constants(ctx.sys, SampleParams{4096, ctx.seed});
  if (ctx.cfg.contains("threshold")) constants.small_distance_threshold = require_number(ctx.cfg, "threshold");
  if (ctx.cfg.contains("factor")) {
    constants.small_distance_factor = require_number(ctx.cfg, "factor");
    constants.expands_small_distances = constants.small_distance_factor > 1.0;
  }
  return constants;
}

inline json run_shadow(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const PseudoOrbit po = config_pseudo_orbit(ctx, rng);
  if (ctx.out) {
    std::ostringstream trace;
    write_pseudo_orbit_jsonl(trace, ctx.sys, po);
    write_file_atomic(*ctx.out / "pseudo_orbit.jsonl", trace.str());
  }
  const ExpansionReport constants = config_constants(ctx);
  Rng cert_rng(Rng::derive_seed(ctx.seed, 1));
  const OpennessCertificate cert = openness_check(ctx.sys, constants, 4096, cert_rng);
  const ShadowResult res = lipschitz_shadow(ctx.sys, po, cert, constants);
  const StepErrorReport check = verify_pseudo_orbit(ctx.sys, po);

  verdicts["pseudo_orbit_valid"] = check.ok;
  verdicts["solver_bound"] = !(res.mode == PullbackMode::Expanding) ||
                             res.sup_deviation <= res.bound + kTolerance;
  json metrics{{"sup_deviation", res.sup_deviation},
               {"bound", res.bound},
               {"worst_step_error", check.worst_error},
               {"shadow", shadow_result_to_json(ctx.sys.space, res)},
               {"constants", expansion_report_to_json(constants)}};
  return metrics;
}

inline json run_oracle_compare(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const PseudoOrbit po = config_pseudo_orbit(ctx, rng);
  const ExpansionReport constants = config_constants(ctx);
  Rng cert_rng(Rng::derive_seed(ctx.seed, 1));
  const OpennessCertificate cert = openness_check(ctx.sys, constants, 4096, cert_rng);
  const ShadowResult res = lipschitz_shadow(ctx.sys, po, cert, constants);

  const double epsilon = ctx.cfg.contains("epsilon") ? require_number(ctx.cfg, "epsilon") : res.bound;
  const GridSample g = grid(ctx.sys.space, ctx.grid_n);
  const std::vector<OracleHit> hits = brute_force_shadow(ctx.sys, po, epsilon, g);
  const double gap = std::max(4.0 * g.resolution, kTolerance);
  const auto clusters = cluster_hits(ctx.sys.space, hits, gap);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : hits) best = std::min(best, distance(ctx.sys.space, h.y0, res.y0));

  verdicts["oracle_nonempty"] = !hits.empty();
  verdicts["single_cluster"] = clusters.size() == 1;
  verdicts["solver_in_cluster"] = best <= 2.0 * g.resolution + kTolerance;
  return json{{"hits", hits.size()},
              {"clusters", clusters.size()},
              {"nearest_hit_distance", hits.empty() ? -1.0 : best},
              {"grid_resolution", g.resolution},
              {"epsilon", epsilon},
              {"sup_deviation", res.sup_deviation},
              {"bound", res.bound}};
}

inline json run_openness(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const ExpansionReport constants = config_constants(ctx);
  const std::size_t trials = static_cast<std::size_t>(ctx.cfg.value("trials", 10000));
  const OpennessCertificate cert = openness_check(ctx.sys, constants, trials, rng);
  const bool expected = ctx.cfg.value("expected_verdict", true);
  verdicts["verdict_as_expected"] = cert.verdict == expected;
  return json{{"certificate", openness_to_json(ctx.sys.space, cert)},
              {"constants", expansion_report_to_json(constants)}};
}

inline json run_expansivity(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  if (!ctx.cfg.contains("candidates")) throw ConfigError("expansivity needs 'candidates'");
  const std::vector<double> candidates = ctx.cfg.at("candidates").get<std::vector<double>>();
  ExpansivitySearchParams params;
  params.horizon = ctx.horizon;
  params.pair_count = static_cast<std::size_t>(ctx.cfg.value("pairs", 10000));
  params.strong = ctx.cfg.value("strong", false);
  const std::string mode_text = ctx.cfg.value("mode", all_invertible(ctx.sys) ? "two_sided" : "positive");
  const IterationMode mode = mode_text == "two_sided" ? IterationMode::TwoSided : IterationMode::Positive;
  const ExpansivityEstimate est = expansivity_search(ctx.sys, candidates, params, rng, mode);

  const std::string expected = ctx.cfg.value("expected_verdict", std::string("not_refuted"));
  bool as_expected = true;
  if (expected == "not_refuted")
    as_expected = est.verdict != ExpansivityVerdict::Refuted;
  else if (expected == "certified_analytic")
    as_expected = est.verdict == ExpansivityVerdict::CertifiedAnalytic;
  else if (expected == "refuted")
    as_expected = est.verdict == ExpansivityVerdict::Refuted;
  else
    throw ConfigError("expected_verdict must be not_refuted, certified_analytic or refuted");
  verdicts["verdict_as_expected"] = as_expected;
  return json{{"estimate", expansivity_to_json(ctx.sys.space, est)}};
}

inline json run_separation(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const double proximity = require_number(ctx.cfg, "e");
  const double target = require_number(ctx.cfg, "alpha");
  SeparationParams params;
  params.pair_count = static_cast<std::size_t>(ctx.cfg.value("pairs", 2000));
  params.cap = ctx.cfg.value("cap", 64LL);
  const SeparationHorizon sep = separation_horizon(ctx.sys, proximity, target, rng, params);
  verdicts["bounded"] = sep.bounded;
  if (ctx.cfg.contains("expected_steps"))
    verdicts["steps_as_expected"] = sep.steps == ctx.cfg.at("expected_steps").get<long long>();
  if (ctx.cfg.value("cross_check_sampled", false)) {
    SeparationParams forced = params;
    forced.force_sampled = true;
    Rng rng2(Rng::derive_seed(ctx.seed, 2));
    const SeparationHorizon sampled = separation_horizon(ctx.sys, proximity, target, rng2, forced);
    verdicts["sampled_agrees"] = sampled.steps == sep.steps;
  }
  return json{{"separation", separation_to_json(sep)}};
}

inline json run_limit(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const auto [lo, hi] = parse_window(ctx.cfg);
  const auto profile = parse_profile(ctx.cfg);
  const Point x0 = ctx.cfg.contains("x0") ? point_from_json(ctx.sys.space, ctx.cfg.at("x0"))
                                          : random_point(ctx.sys.space, rng);
  const SymbolWord sigma = random_word(ctx.sys, lo, static_cast<std::size_t>(hi - lo + 1), rng);
  const PseudoOrbit po = generate_decaying_pseudo_orbit(ctx.sys, x0, sigma, lo, hi, profile, rng);
  const ExpansionReport constants = config_constants(ctx);
  Rng cert_rng(Rng::derive_seed(ctx.seed, 1));
  const OpennessCertificate cert = openness_check(ctx.sys, constants, 4096, cert_rng);
  const long long stride = ctx.cfg.value("stride", 10LL);
  const LimitShadowReport rep = limit_shadow_experiment(ctx.sys, po, profile, cert, constants, stride);

  const bool expected_applicable = ctx.cfg.value("expected_applicable", true);
  verdicts["applicable_as_expected"] = rep.applicable == expected_applicable;
  verdicts["levels_ok"] = rep.ok;
  return json{{"report", limit_report_to_json(rep)}};
}

inline json run_continuity(const RunContext& ctx, json& verdicts) {
  Rng rng(ctx.seed);
  const auto [lo, hi] = parse_window(ctx.cfg);
  const double delta = require_number(ctx.cfg, "delta");
  const double epsilon = require_number(ctx.cfg, "epsilon");
  const double target = require_number(ctx.cfg, "alpha");
  const std::size_t couples = static_cast<std::size_t>(ctx.cfg.value("couples", 200));

  const ExpansionReport constants = config_constants(ctx);
  Rng cert_rng(Rng::derive_seed(ctx.seed, 1));
  const OpennessCertificate cert = openness_check(ctx.sys, constants, 4096, cert_rng);
  std::vector<double> candidates = {0.2};
  if (ctx.cfg.contains("e_candidates"))
    candidates = ctx.cfg.at("e_candidates").get<std::vector<double>>();
  ExpansivitySearchParams esp;
  esp.horizon = ctx.horizon;
  esp.pair_count = static_cast<std::size_t>(ctx.cfg.value("pairs", 2000));
  Rng exp_rng(Rng::derive_seed(ctx.seed, 2));
  const ExpansivityEstimate est =
      expansivity_search(ctx.sys, candidates, esp, exp_rng,
                         all_invertible(ctx.sys) ? IterationMode::TwoSided : IterationMode::Positive);

  // Proximity the pairs must satisfy; mirrors the choice inside the
  // experiment so couples are built close enough to qualify.
  Rng sep_rng(Rng::derive_seed(ctx.seed, 3));
  const SeparationHorizon sep = separation_horizon(ctx.sys, est.constant, target, sep_rng);
  const double beta = est.constant / (3.0 * std::ldexp(1.0, static_cast<int>(sep.steps) + 1));

  PseudoOrbitEnsemble ensemble;
  ensemble.members.reserve(2 * couples);
  // Twins share the base's points up to couple_len and take independent
  // step noise beyond, so the weighted distance is at most
  // diam / 2^(couple_len + 1) < beta while the far tails genuinely differ.
  const long long couple_len = continuity_couple_length(diameter(ctx.sys.space), beta);
  for (std::size_t c = 0; c < couples; ++c) {
    Rng member_rng(Rng::derive_seed(ctx.seed, 100 + c));
    const Point x0 = random_point(ctx.sys.space, member_rng);
    const SymbolWord sigma =
        random_word(ctx.sys, lo, static_cast<std::size_t>(hi - lo + 1), member_rng);
    PseudoOrbit base = generate_pseudo_orbit(ctx.sys, x0, sigma, lo, hi, delta, member_rng);
    Rng twin_rng(Rng::derive_seed(ctx.seed, 100 + c + couples));
    ensemble.members.push_back(base);
    ensemble.members.push_back(diverging_twin(ctx.sys, base, couple_len, twin_rng));
  }

  if (ctx.out && ctx.cfg.value("dump_ensemble", false))
    write_ensemble(*ctx.out / "ensemble", ctx.sys, ensemble);
  UniquenessProbe probe;
  probe.stride = static_cast<std::size_t>(ctx.cfg.value("probe_stride", 50));
  probe.grid_n = ctx.grid_n / 10 + 1000;
  const ContinuityReport rep =
      continuity_experiment(ctx.sys, ensemble, epsilon, target, est, cert, constants, rng, probe);
  verdicts["continuity_ok"] = rep.ok;
  verdicts["enough_pairs"] = rep.pairs_tested >= couples;
  return json{{"report", continuity_report_to_json(rep)},
              {"expansivity", expansivity_to_json(ctx.sys.space, est)}};
}

inline json run_derived_systems(const RunContext& ctx, json& verdicts) {
  const int k = ctx.cfg.value("k", 2);
  const std::size_t runs = static_cast<std::size_t>(ctx.cfg.value("runs", 20));
  const auto [lo, hi] = parse_window(ctx.cfg);
  const double delta = require_number(ctx.cfg, "delta");

  const System powered = power_system(ctx.sys, k);
  const ExpansionReport base_constants = expansion_constants(ctx.sys);
  const ExpansionReport pow_constants = expansion_constants(powered);
  Rng cert_rng(Rng::derive_seed(ctx.seed, 1));
  const OpennessCertificate cert = openness_check(powered, pow_constants, 4096, cert_rng);

  bool ratio_ok = true;
  if (base_constants.method == EstimateMethod::Analytic && pow_constants.method == EstimateMethod::Analytic)
    ratio_ok = std::fabs(pow_constants.expanding_ratio -
                         std::pow(base_constants.expanding_ratio, k)) <= kTolerance;

  double worst = 0.0;
  bool bounds_ok = true;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(Rng::derive_seed(ctx.seed, 500 + r));
    const Point x0 = random_point(powered.space, rng);
    const SymbolWord sigma = random_word(powered, lo, static_cast<std::size_t>(hi - lo + 1), rng);
    const PseudoOrbit po = generate_pseudo_orbit(powered, x0, sigma, lo, hi, delta, rng);
    const ShadowResult res = lipschitz_shadow(powered, po, cert, pow_constants);
    worst = std::max(worst, res.sup_deviation);
    bounds_ok = bounds_ok && res.sup_deviation <= res.bound + kTolerance;
  }

  bool involution_ok = true;
  if (all_invertible(ctx.sys)) involution_ok = inverse_system(inverse_system(ctx.sys)) == ctx.sys;

  verdicts["power_ratio"] = ratio_ok;
  verdicts["power_shadow_bounds"] = bounds_ok;
  verdicts["inverse_involution"] = involution_ok;
  return json{{"k", k},
              {"symbols", powered.symbol_count()},
              {"worst_sup_deviation", worst},
              {"power_constants", expansion_report_to_json(pow_constants)}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run / sweep drivers

inline RunOutcome run_experiment(const json& cfg, const RunOptions& options = {}) {
  RunOutcome out;
  const auto started = std::chrono::steady_clock::now();
  try {
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    detail::RunContext ctx;
    ctx.cfg = cfg;
    const json& exp = detail::require_field(cfg, "experiment");
    if (!exp.is_string()) throw ConfigError("'experiment' must be a string");
    const std::string experiment = exp.get<std::string>();
    static const char* kExperiments[] = {"shadow",      "oracle_compare", "openness",
                                         "expansivity", "separation",     "limit",
                                         "continuity",  "derived_systems"};
    if (std::find_if(std::begin(kExperiments), std::end(kExperiments),
                     [&](const char* n) { return experiment == n; }) == std::end(kExperiments))
      throw ConfigError("unknown experiment '" + experiment + "'");
    ctx.sys = system_from_json(detail::require_field(cfg, "system"));

    const bool needs_seed = !(experiment == "shadow" && cfg.contains("points"));
    if (options.seed_override)
      ctx.seed = *options.seed_override;
    else if (cfg.contains("seed"))
      ctx.seed = cfg.at("seed").get<std::uint64_t>();
    else if (needs_seed)
      throw ConfigError("config needs a 'seed' whenever randomness is used");
    ctx.grid_n = options.grid_override ? *options.grid_override
                                       : static_cast<std::size_t>(cfg.value("grid", 100000));
    ctx.horizon = options.horizon_override ? *options.horizon_override : cfg.value("horizon", 40LL);
    if (options.out_dir)
      ctx.out = std::filesystem::path(*options.out_dir);
    else if (cfg.contains("out"))
      ctx.out = std::filesystem::path(cfg.at("out").get<std::string>());

    json verdicts = json::object();
    json metrics;
    if (experiment == "shadow")
      metrics = detail::run_shadow(ctx, verdicts);
    else if (experiment == "oracle_compare")
      metrics = detail::run_oracle_compare(ctx, verdicts);
    else if (experiment == "openness")
      metrics = detail::run_openness(ctx, verdicts);
    else if (experiment == "expansivity")
      metrics = detail::run_expansivity(ctx, verdicts);
    else if (experiment == "separation")
      metrics = detail::run_separation(ctx, verdicts);
    else if (experiment == "limit")
      metrics = detail::run_limit(ctx, verdicts);
    else if (experiment == "continuity")
      metrics = detail::run_continuity(ctx, verdicts);
    else if (experiment == "derived_systems")
      metrics = detail::run_derived_systems(ctx, verdicts);
    else
      throw ConfigError("unknown experiment '" + experiment + "'");

    bool pass = true;
    for (const auto& [name, value] : verdicts.items()) {
      (void)name;
      pass = pass && value.is_boolean() && value.get<bool>();
    }
    const double wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
    out.report = json{{"schema_version", kSchemaVersion}, {"version", kVersion},
                      {"experiment", experiment},        {"config", cfg},
                      {"seed", ctx.seed},                {"verdicts", verdicts},
                      {"metrics", metrics},              {"pass", pass},
                      {"wall_time_ms", wall_ms}};
    out.status = pass ? ExitStatus::Ok : ExitStatus::VerdictFailed;

    if (ctx.out) {
      const std::filesystem::path& dir = *ctx.out;
      detail::write_file_atomic(dir / "report.json", out.report.dump(2) + "\n");
      if (metrics.contains("shadow")) {
        std::ostringstream csv;
        const auto& sh = metrics.at("shadow");
        write_deviation_csv(csv, sh.at("orbit").at("base").get<long long>(),
                            sh.at("deviations").get<std::vector<double>>(),
                            sh.at("bound").get<double>());
        detail::write_file_atomic(dir / "deviations.csv", csv.str());
      }
      if (metrics.contains("report") && metrics.at("report").contains("deviations")) {
        std::ostringstream csv;
        const auto& rp = metrics.at("report");
        write_deviation_csv(csv, rp.at("base").get<long long>(),
                            rp.at("deviations").get<std::vector<double>>(),
                            rp.value("shadow_factor", 0.0));
        detail::write_file_atomic(dir / "deviations.csv", csv.str());
      }
    }
  } catch (const ConfigError& e) {
    out.status = ExitStatus::BadConfig;
    out.message = e.what();
  } catch (const json::exception& e) {
    out.status = ExitStatus::BadConfig;
    out.message = e.what();
  } catch (const PreconditionError& e) {
    out.status = ExitStatus::PreconditionViolated;
    out.message = std::string("violated precondition [") + e.precondition() + "]: " + e.what();
  } catch (const NotInvertibleError& e) {
    out.status = ExitStatus::PreconditionViolated;
    out.message = std::string("violated precondition [invertibility]: ") + e.what();
  } catch (const InvalidArgumentError& e) {
    out.status = ExitStatus::BadConfig;
    out.message = e.what();
  } catch (const Error& e) {
    out.status = ExitStatus::InvariantBreached;
    out.message = e.what();
  }
  return out;
}

inline RunOutcome run_experiment_file(const std::string& path, const RunOptions& options = {}) {
  RunOutcome out;
  std::ifstream is(path);
  if (!is) {
    out.status = ExitStatus::BadConfig;
    out.message = "cannot open config file " + path;
    return out;
  }
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    out.status = ExitStatus::BadConfig;
    out.message = std::string("malformed JSON in ") + path + ": " + e.what();
    return out;
  }
  return run_experiment(cfg, options);
}

struct SweepOutcome {
  ExitStatus status = ExitStatus::Ok;
  json aggregate;
  std::string message;
};

/// Runs every *.json config in the directory (sorted by filename). All
/// configs must share one experiment type. Emits one CSV row per run plus
/// an aggregate report; a hard run error aborts with a partial-results
/// manifest.
inline SweepOutcome run_sweep(const std::string& dir, const RunOptions& options = {}) {
  SweepOutcome out;
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  if (ec) {
    out.status = ExitStatus::BadConfig;
    out.message = "cannot read sweep directory " + dir;
    return out;
  }
  std::sort(files.begin(), files.end());

  std::string experiment;
  std::ostringstream csv;
  csv << "config,seed,pass,sup_deviation,bound\n";
  json runs = json::array();
  std::size_t failures = 0;
  double max_sup = 0.0, sum_sup = 0.0;
  std::size_t sup_count = 0;

  for (const auto& file : files) {
    json cfg;
    try {
      std::ifstream is(file);
      cfg = json::parse(is);
    } catch (const json::exception& e) {
      out.status = ExitStatus::BadConfig;
      out.message = "malformed JSON in " + file.string() + ": " + e.what();
      break;
    }
    const std::string this_exp = cfg.value("experiment", "");
    if (experiment.empty())
      experiment = this_exp;
    else if (this_exp != experiment) {
      out.status = ExitStatus::BadConfig;
      out.message = "sweep mixes experiment types ('" + experiment + "' vs '" + this_exp + "')";
      break;
    }
    RunOptions run_options = options;
    if (options.out_dir)
      run_options.out_dir = (std::filesystem::path(*options.out_dir) / file.stem()).string();
    const RunOutcome r = run_experiment(cfg, run_options);
    if (r.status == ExitStatus::BadConfig || r.status == ExitStatus::PreconditionViolated ||
        r.status == ExitStatus::InvariantBreached) {
      out.status = r.status;
      out.message = "run " + file.string() + " failed: " + r.message;
      break;
    }
    const bool pass = r.status == ExitStatus::Ok;
    failures += pass ? 0 : 1;
    double sup = -1.0, bound = -1.0;
    if (r.report.contains("metrics")) {
      const json& m = r.report.at("metrics");
      if (m.contains("sup_deviation")) sup = m.at("sup_deviation").get<double>();
      if (m.contains("bound")) bound = m.at("bound").get<double>();
    }
    if (sup >= 0.0) {
      max_sup = std::max(max_sup, sup);
      sum_sup += sup;
      ++sup_count;
    }
    csv << file.filename().string() << ',' << r.report.value("seed", 0ULL) << ',' << (pass ? 1 : 0)
        << ',' << sup << ',' << bound << '\n';
    runs.push_back(json{{"config", file.filename().string()},
                        {"pass", pass},
                        {"sup_deviation", sup}});
  }

  const bool aborted = out.status != ExitStatus::Ok;
  out.aggregate = json{{"schema_version", kSchemaVersion},
                       {"version", kVersion},
                       {"experiment", experiment},
                       {"runs", runs},
                       {"completed", runs.size()},
                       {"total", files.size()},
                       {"failures", failures},
                       {"partial", aborted},
                       {"max_sup_deviation", max_sup},
                       {"mean_sup_deviation", sup_count ? sum_sup / static_cast<double>(sup_count) : 0.0}};
  if (!aborted && failures > 0) out.status = ExitStatus::VerdictFailed;
  if (options.out_dir) {
    detail::write_file_atomic(std::filesystem::path(*options.out_dir) / "sweep.csv", csv.str());
    detail::write_file_atomic(std::filesystem::path(*options.out_dir) /
                                  (aborted ? "partial_manifest.json" : "sweep.json"),
                              out.aggregate.dump(2) + "\n");
  }
  return out;
}

inline std::string config_schema_text() {
  json schema{
      {"schema_version", kSchemaVersion},
      {"version", kVersion},
      {"config", json{
        {"experiment", "shadow | oracle_compare | openness | expansivity | separation | limit | continuity | derived_systems"},
        {"system", json{{"space", json{{"kind", "circle | interval | binary_shift | finite_table"},
                                       {"window_radius", "int (binary_shift)"},
                                       {"extension", "constant_zero | periodic (binary_shift)"},
                                       {"distances", "[[...]] (finite_table)"}}},
                        {"maps", json::array({json{{"family", "circle_affine | interval_tent | interval_clamp | shift_map | finite_map | composite | inverse"},
                                                   {"a", "int, circle_affine degree"},
                                                   {"b", "number, circle_affine offset"},
                                                   {"flip", "bool, shift_map complement"},
                                                   {"table", "[int], finite_map"}}})}}},
        {"seed", "uint64; required whenever randomness is used"},
        {"window", "[lo, hi] with lo <= 0 <= hi"},
        {"delta", "pseudo-orbit error bound"},
        {"epsilon", "tracking tolerance (oracle_compare, continuity)"},
        {"profile", "{kind: geometric|constant|zero, base, ratio, value} (limit)"},
        {"points", "explicit pseudo-orbit points (shadow); needs sigma and delta"},
        {"sigma", "{base, word, extension: repeat_last|cyclic|fail_outside}"},
        {"x0", "optional start point"},
        {"grid", "oracle grid size (default 100000)"},
        {"horizon", "iteration horizon (default 40)"},
        {"candidates", "[number] expansivity constants to try"},
        {"e", "separation proximity"},
        {"alpha", "separation / continuity closeness target"},
        {"couples", "continuity ensemble couple count"},
        {"expected_verdict", "bool (openness) or not_refuted|certified_analytic|refuted (expansivity)"},
        {"expected_steps", "int (separation)"},
        {"expected_applicable", "bool (limit)"},
        {"threshold", "override small-distance threshold"},
        {"factor", "override small-distance factor"},
        {"out", "report directory"}}},
      {"reports", "report.json per run; deviations.csv for shadow/limit; sweep.csv + sweep.json per sweep"},
      {"exit_codes", json{{"0", "all verdicts pass"},
                          {"1", "a verdict failed"},
                          {"2", "schema violation / malformed config"},
                          {"3", "theorem precondition violated (named in the message)"},
                          {"4", "internal invariant breached"}}}};
  return schema.dump(2) + "\n";
}

}  // namespace ifs
