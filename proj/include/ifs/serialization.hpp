#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifs/errors.hpp"
#include "ifs/orbit.hpp"
#include "ifs/shadowing.hpp"
#include "ifs/space.hpp"
#include "ifs/system.hpp"

namespace ifs {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Spaces and points

inline json space_to_json(const Space& s) {
  switch (s.kind) {
    case SpaceKind::Circle: return json{{"kind", "circle"}};
    case SpaceKind::Interval: return json{{"kind", "interval"}};
    case SpaceKind::BinaryShift:
      return json{{"kind", "binary_shift"},
                  {"window_radius", s.window_radius},
                  {"extension", s.extension == ShiftExtension::Periodic ? "periodic" : "constant_zero"}};
    case SpaceKind::FiniteTable: return json{{"kind", "finite_table"}, {"distances", s.table}};
  }
  throw InternalInvariantError("space_to_json: unreachable kind");
}

inline Space space_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("space needs a string field 'kind'");
  const std::string kind = j["kind"];
  if (kind == "circle") return Space::circle();
  if (kind == "interval") return Space::interval();
  if (kind == "binary_shift") {
    if (!j.contains("window_radius")) throw ConfigError("binary_shift space needs 'window_radius'");
    ShiftExtension ext = ShiftExtension::ConstantZero;
    if (j.contains("extension")) {
      const std::string e = j["extension"];
      if (e == "periodic")
        ext = ShiftExtension::Periodic;
      else if (e != "constant_zero")
        throw ConfigError("binary_shift extension must be 'constant_zero' or 'periodic'");
    }
    return Space::binary_shift(j["window_radius"].get<int>(), ext);
  }
  if (kind == "finite_table") {
    if (!j.contains("distances")) throw ConfigError("finite_table space needs 'distances'");
    return Space::finite_table(j["distances"].get<std::vector<std::vector<double>>>());
  }
  throw ConfigError("unknown space kind '" + kind + "'");
}

inline json point_to_json(const Space& s, const Point& p) {
  switch (s.kind) {
    case SpaceKind::Circle:
    case SpaceKind::Interval: return json(p.value);
    case SpaceKind::BinaryShift: return json(shift_point_to_string(s, p));
    case SpaceKind::FiniteTable: return json(p.index);
  }
  throw InternalInvariantError("point_to_json: unreachable kind");
}

inline Point point_from_json(const Space& s, const json& j) {
  switch (s.kind) {
    case SpaceKind::Circle:
      if (!j.is_number()) throw ConfigError("circle point must be a number");
      return circle_point(j.get<double>());
    case SpaceKind::Interval:
      if (!j.is_number()) throw ConfigError("interval point must be a number");
      return interval_point(j.get<double>());
    case SpaceKind::BinaryShift:
      if (!j.is_string()) throw ConfigError("binary_shift point must be a bit string");
      return shift_point_from_string(s, j.get<std::string>());
    case SpaceKind::FiniteTable:
      if (!j.is_number_unsigned()) throw ConfigError("finite_table point must be an index");
      return table_point(s, j.get<std::uint32_t>());
  }
  throw InternalInvariantError("point_from_json: unreachable kind");
}

// ---------------------------------------------------------------------------
// Maps and systems

inline json map_to_json(const MapDescriptor& m) {
  switch (m.family) {
    case MapFamily::CircleAffine: return json{{"family", "circle_affine"}, {"a", m.a}, {"b", m.b}};
    case MapFamily::IntervalTent: return json{{"family", "interval_tent"}};
    case MapFamily::IntervalClamp: return json{{"family", "interval_clamp"}};
    case MapFamily::ShiftMap: return json{{"family", "shift_map"}, {"flip", m.flip}};
    case MapFamily::FiniteMap: return json{{"family", "finite_map"}, {"table", m.table}};
    case MapFamily::Composite: {
      json parts = json::array();
      for (const auto& p : m.parts) parts.push_back(map_to_json(p));
      return json{{"family", "composite"}, {"parts", parts}};
    }
    case MapFamily::Inverse: return json{{"family", "inverse"}, {"inner", map_to_json(m.parts[0])}};
  }
  throw InternalInvariantError("map_to_json: unreachable family");
}

inline MapDescriptor map_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw ConfigError("map needs a string field 'family'");
  const std::string family = j["family"];
  if (family == "circle_affine") {
    if (!j.contains("a") || !j.contains("b")) throw ConfigError("circle_affine needs 'a' and 'b'");
    return MapDescriptor::circle_affine(j["a"].get<int>(), j["b"].get<double>());
  }
  if (family == "interval_tent") return MapDescriptor::interval_tent();
  if (family == "interval_clamp") return MapDescriptor::interval_clamp();
  if (family == "shift_map") return MapDescriptor::shift_map(j.value("flip", false));
  if (family == "finite_map") {
    if (!j.contains("table")) throw ConfigError("finite_map needs 'table'");
    return MapDescriptor::finite_map(j["table"].get<std::vector<std::uint32_t>>());
  }
  if (family == "composite") {
    if (!j.contains("parts")) throw ConfigError("composite needs 'parts'");
    std::vector<MapDescriptor> parts;
    for (const auto& p : j["parts"]) parts.push_back(map_from_json(p));
    return MapDescriptor::composite(std::move(parts));
  }
  if (family == "inverse") {
    if (!j.contains("inner")) throw ConfigError("inverse needs 'inner'");
    return MapDescriptor::inverse_of(map_from_json(j["inner"]));
  }
  throw ConfigError("unknown map family '" + family + "'");
}

inline json system_to_json(const System& sys) {
  json maps = json::array();
  for (const auto& m : sys.maps) maps.push_back(map_to_json(m));
  return json{{"space", space_to_json(sys.space)}, {"maps", maps}};
}

inline System system_from_json(const json& j) {
  if (!j.is_object() || !j.contains("space") || !j.contains("maps"))
    throw ConfigError("system needs 'space' and 'maps'");
  Space space = space_from_json(j["space"]);
  std::vector<MapDescriptor> maps;
  if (!j["maps"].is_array() || j["maps"].empty()) throw ConfigError("'maps' must be a nonempty array");
  for (const auto& m : j["maps"]) maps.push_back(map_from_json(m));
  try {
    return make_system(std::move(space), std::move(maps));
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid system: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Symbol words

inline json word_to_json(const SymbolWord& w) {
  const char* ext = "repeat_last";
  if (w.extension == WordExtension::Cyclic) ext = "cyclic";
  if (w.extension == WordExtension::FailOutside) ext = "fail_outside";
  return json{{"base", w.base}, {"word", w.word}, {"extension", ext}};
}

inline SymbolWord word_from_json(const json& j) {
  if (!j.is_object() || !j.contains("word")) throw ConfigError("symbol word needs 'word'");
  SymbolWord w;
  w.base = j.value("base", 0LL);
  w.word = j["word"].get<std::vector<int>>();
  if (w.word.empty()) throw ConfigError("symbol word must be nonempty");
  const std::string ext = j.value("extension", "repeat_last");
  if (ext == "repeat_last")
    w.extension = WordExtension::RepeatLast;
  else if (ext == "cyclic")
    w.extension = WordExtension::Cyclic;
  else if (ext == "fail_outside")
    w.extension = WordExtension::FailOutside;
  else
    throw ConfigError("unknown word extension '" + ext + "'");
  return w;
}

// ---------------------------------------------------------------------------
// Pseudo-orbits as JSON lines

/// One meta record, then one record per index {i, point, symbol, step_error}
/// (step_error is null at the last index).
inline void write_pseudo_orbit_jsonl(std::ostream& os, const System& sys, const PseudoOrbit& po) {
  os << json{{"record", "meta"},
             {"base", po.base},
             {"delta", po.delta},
             {"sigma", word_to_json(po.sigma)}}
            .dump()
     << '\n';
  for (long long i = po.lo(); i <= po.hi(); ++i) {
    json row{{"i", i},
             {"point", point_to_json(sys.space, po.at(i))},
             {"symbol", po.sigma.at(i)}};
    if (i < po.hi()) {
      const Point image = apply(sys, po.sigma.at(i), po.at(i));
      row["step_error"] = distance(sys.space, image, po.at(i + 1));
    } else {
      row["step_error"] = nullptr;
    }
    os << row.dump() << '\n';
  }
}

inline PseudoOrbit read_pseudo_orbit_jsonl(std::istream& is, const System& sys) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("pseudo-orbit stream is empty");
  json meta = json::parse(line);
  if (meta.value("record", "") != "meta") throw ConfigError("pseudo-orbit stream must start with a meta record");
  PseudoOrbit po;
  po.base = meta.at("base").get<long long>();
  po.delta = meta.at("delta").get<double>();
  po.sigma = word_from_json(meta.at("sigma"));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json row = json::parse(line);
    po.points.push_back(point_from_json(sys.space, row.at("point")));
  }
  if (po.points.empty()) throw ConfigError("pseudo-orbit stream has no index records");
  return po;
}

/// Ensembles go to a directory: member_0000.jsonl, ... plus manifest.json.
inline void write_ensemble(const std::filesystem::path& dir, const System& sys,
                           const PseudoOrbitEnsemble& ensemble) {
  std::filesystem::create_directories(dir);
  double delta = 0.0;
  for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
    delta = std::max(delta, ensemble.members[k].delta);
    char name[64];
    std::snprintf(name, sizeof name, "member_%04zu.jsonl", k);
    std::ofstream os(dir / name, std::ios::trunc);
    if (!os) throw Error("cannot write ensemble member " + (dir / name).string());
    write_pseudo_orbit_jsonl(os, sys, ensemble.members[k]);
  }
  std::ofstream manifest(dir / "manifest.json", std::ios::trunc);
  manifest << json{{"count", ensemble.members.size()},
                   {"delta", delta},
                   {"system", system_to_json(sys)}}
                  .dump(2)
           << "\n";
}

inline PseudoOrbitEnsemble read_ensemble(const std::filesystem::path& dir, const System& sys) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ConfigError("ensemble manifest not found in " + dir.string());
  const json manifest = json::parse(mf);
  const std::size_t count = manifest.at("count").get<std::size_t>();
  PseudoOrbitEnsemble ensemble;
  ensemble.members.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "member_%04zu.jsonl", k);
    std::ifstream is(dir / name);
    if (!is) throw ConfigError("missing ensemble member " + (dir / name).string());
    ensemble.members.push_back(read_pseudo_orbit_jsonl(is, sys));
  }
  return ensemble;
}

// ---------------------------------------------------------------------------
// Result reports

inline json shadow_result_to_json(const Space& space, const ShadowResult& r) {
  json points = json::array();
  for (const Point& p : r.orbit.points) points.push_back(point_to_json(space, p));
  return json{{"y0", point_to_json(space, r.y0)},
              {"orbit", json{{"base", r.orbit.base}, {"points", points}}},
              {"deviations", r.deviations},
              {"sup_deviation", r.sup_deviation},
              {"bound", r.bound},
              {"constants",
               json{{"expansion_factor", r.constants.expansion_factor},
                    {"shadow_factor", r.constants.shadow_factor},
                    {"epsilon", r.constants.epsilon}}},
              {"truncation_bound", r.truncation_bound},
              {"mode", r.mode == PullbackMode::Expanding ? "expanding" : "bijective"},
              {"tie_breaks", r.tie_breaks}};
}

inline json expansion_report_to_json(const ExpansionReport& r) {
  return json{{"expanding_ratio", r.expanding_ratio},
              {"small_distance_threshold", r.small_distance_threshold},
              {"small_distance_factor", r.small_distance_factor},
              {"expands_small_distances", r.expands_small_distances},
              {"method", r.method == EstimateMethod::Analytic ? "analytic" : "sampled"}};
}

inline json openness_to_json(const Space& space, const OpennessCertificate& c) {
  json j{{"preimage_radius", c.preimage_radius},
         {"verdict", c.verdict},
         {"method", c.method == EstimateMethod::Analytic ? "analytic" : "sampled"},
         {"threshold_used", c.threshold_used},
         {"factor_used", c.factor_used}};
  if (c.witness)
    j["witness"] = json{{"symbol", c.witness->symbol},
                        {"x", point_to_json(space, c.witness->x)},
                        {"y", point_to_json(space, c.witness->y)}};
  return j;
}

inline json expansivity_to_json(const Space& space, const ExpansivityEstimate& e) {
  const char* verdict = "passed_sampling";
  if (e.verdict == ExpansivityVerdict::CertifiedAnalytic) verdict = "certified_analytic";
  if (e.verdict == ExpansivityVerdict::Refuted) verdict = "refuted";
  json j{{"constant", e.constant},
         {"horizon", e.horizon},
         {"pair_count", e.pair_count},
         {"mode", e.mode == IterationMode::TwoSided ? "two_sided" : "positive"},
         {"strong", e.strong},
         {"verdict", verdict}};
  if (e.witness)
    j["witness"] = json{{"x", point_to_json(space, e.witness->first)},
                        {"y", point_to_json(space, e.witness->second)}};
  return j;
}

inline json separation_to_json(const SeparationHorizon& s) {
  return json{{"proximity", s.proximity},
              {"target", s.target},
              {"steps", s.steps},
              {"bounded", s.bounded},
              {"method", s.method == EstimateMethod::Analytic ? "analytic" : "sampled"},
              {"mode", s.mode == IterationMode::TwoSided ? "two_sided" : "positive"}};
}

inline json limit_report_to_json(const LimitShadowReport& r) {
  json levels = json::array();
  for (const auto& lv : r.levels)
    levels.push_back(json{{"start_index", lv.start_index},
                          {"level", lv.level},
                          {"tail_sup", lv.tail_sup},
                          {"tail_bound", lv.tail_bound},
                          {"suffix_sup", lv.suffix_sup},
                          {"suffix_bound", lv.suffix_bound},
                          {"ok", lv.ok}});
  return json{{"applicable", r.applicable},
              {"base", r.base},
              {"deviations", r.deviations},
              {"levels", levels},
              {"shadow_factor", r.shadow_factor},
              {"sup_deviation", r.sup_deviation},
              {"ok", r.ok}};
}

inline json continuity_report_to_json(const ContinuityReport& r) {
  return json{{"pairs_tested", r.pairs_tested},
              {"pairs_skipped", r.pairs_skipped},
              {"max_displacement", r.max_displacement},
              {"proximity_bound", r.proximity_bound},
              {"horizon", r.horizon},
              {"uniqueness_probes", r.uniqueness_probes},
              {"ok", r.ok}};
}

inline json contraction_to_json(const ContractionReport& r) {
  return json{{"locality", r.locality},
              {"ratio", r.ratio},
              {"side", r.side == ContractionSide::Stable ? "stable" : "unstable"},
              {"samples", r.samples},
              {"certified_analytic", r.certified_analytic},
              {"contracting", r.contracting}};
}

/// Deviation traces as CSV rows (index, deviation, bound).
inline void write_deviation_csv(std::ostream& os, long long base, const std::vector<double>& deviations,
                                double bound) {
  os << "index,deviation,bound\n";
  for (std::size_t k = 0; k < deviations.size(); ++k)
    os << base + static_cast<long long>(k) << ',' << deviations[k] << ',' << bound << '\n';
}

}  // namespace ifs
