#pragma once

// JSON and CSV serialization: check reports, run configurations, the
// operator catalog and character tables. Objects are key-sorted, so equal
// inputs give byte-identical output.

#include "dyfock/basis.hpp"
#include "dyfock/verify.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dyfock {

inline constexpr int report_schema_version = 1;

using Json = nlohmann::json;

inline Json to_json(const CheckReport& r) {
  Json j;
  j["relation"] = r.relation;
  j["params"] = r.params;
  j["passed"] = r.passed;
  j["discrepancy_count"] = r.discrepancy_count;
  j["first_discrepancy"] = r.first_discrepancy;
  j["convention"] = r.convention;
  j["cells_checked"] = r.cells_checked;
  return j;
}

struct Window {
  int lo = -3;
  int hi = 3;
};

inline Window parse_window(const std::string& s) {
  const auto colon = s.find(':', s.front() == '-' ? 1 : 0);
  if (colon == std::string::npos) throw std::invalid_argument("window must be lo:hi");
  Window w;
  std::size_t used = 0;
  w.lo = std::stoi(s.substr(0, colon), &used);
  if (used != colon) throw std::invalid_argument("bad window bound");
  const std::string rest = s.substr(colon + 1);
  w.hi = std::stoi(rest, &used);
  if (used != rest.size()) throw std::invalid_argument("bad window bound");
  if (w.lo > w.hi) throw std::invalid_argument("window lo exceeds hi");
  return w;
}

inline std::string window_str(const Window& w) { return std::to_string(w.lo) + ":" + std::to_string(w.hi); }

struct RunConfig {
  std::string command;
  std::string selector;
  std::size_t order = 2;
  Window window;
  std::string battery = "standard";
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  std::string cache_dir;
  bool strict_sector = false;
  std::map<std::string, std::string> extra;
};

inline Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["selector"] = c.selector;
  j["order"] = c.order;
  j["window"] = window_str(c.window);
  j["battery"] = c.battery;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["format"] = c.format;
  j["strict_sector"] = c.strict_sector;
  j["extra"] = c.extra;
  // the cache directory is left out: enabling the cache must not change reports
  return j;
}

/// Fields present in the document override those of `base`.
inline RunConfig run_config_from_json(const Json& j, RunConfig base = {}) {
  if (!j.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  if (j.contains("command")) base.command = j.at("command").get<std::string>();
  if (j.contains("selector")) base.selector = j.at("selector").get<std::string>();
  if (j.contains("order")) base.order = j.at("order").get<std::size_t>();
  if (j.contains("window")) base.window = parse_window(j.at("window").get<std::string>());
  if (j.contains("battery")) base.battery = j.at("battery").get<std::string>();
  if (j.contains("seed") && !j.at("seed").is_null()) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("format")) base.format = j.at("format").get<std::string>();
  if (j.contains("cache_dir")) base.cache_dir = j.at("cache_dir").get<std::string>();
  if (j.contains("strict_sector")) base.strict_sector = j.at("strict_sector").get<bool>();
  if (j.contains("extra")) base.extra = j.at("extra").get<std::map<std::string, std::string>>();
  return base;
}

inline Json suite_json(const RunConfig& c, const std::vector<CheckReport>& reports) {
  std::vector<CheckReport> sorted = reports;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CheckReport& a, const CheckReport& b) {
    return std::tie(a.relation, a.params) < std::tie(b.relation, b.params);
  });
  Json j;
  j["schema"] = report_schema_version;
  j["config"] = to_json(c);
  j["reports"] = Json::array();
  bool all = true;
  for (const auto& r : sorted) {
    j["reports"].push_back(to_json(r));
    all = all && r.passed;
  }
  j["passed"] = all;
  return j;
}

inline std::string suite_text(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  for (const auto& r : reports) {
    os << (r.passed ? "PASS " : "FAIL ") << r.relation;
    for (const auto& [k, v] : r.params) os << ' ' << k << '=' << v;
    os << " cells=" << r.cells_checked;
    if (!r.passed) os << " discrepancies=" << r.discrepancy_count << " first: " << r.first_discrepancy;
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// catalog

inline Json to_json(const PrimitiveFactor& f) {
  Json j;
  j["kind"] = factor_kind_name(f.kind);
  j["label"] = f.label;
  if (f.kind == FactorKind::ExpCreation || f.kind == FactorKind::ExpAnnihilation) {
    j["terms"] = Json::array();
    for (const auto& e : f.exp)
      j["terms"].push_back({{"color", e.color}, {"scale", e.scale.get_str()}, {"alpha", e.alpha}, {"c", e.c.get_str()}});
    j["rule"] = f.kind == FactorKind::ExpCreation ? "a_j(-r): (scale/r) (alpha u + c h)^r"
                                                  : "a_j(r): (scale/r) (u + c h)^-r";
  } else if (f.kind == FactorKind::LatticeShift) {
    j["shift"] = {f.shift.d1.get_str(), f.shift.d2.get_str()};
  } else {
    j["powers"] = Json::array();
    for (const auto& g : f.graded)
      j["powers"].push_back({{"c", g.c.get_str()}, {"scale", g.scale.get_str()}, {"selector", graded_name(g.selector)}});
    j["rule"] = "(u + c h)^(scale * selector eigenvalue)";
  }
  return j;
}

inline Json catalog_json() {
  Json j;
  j["version"] = catalog_version;
  j["operators"] = Json::array();
  for (const auto& name : catalog_names())
    for (Variant v : {Variant::IK, Variant::norm}) {
      OperatorSpec s;
      try {
        s = catalog(name, v);
      } catch (const UnknownOperator&) {
        continue;
      }
      Json op;
      op["name"] = name;
      op["variant"] = variant_name(v);
      op["factors"] = Json::array();
      for (const auto& f : s.factors) op["factors"].push_back(to_json(f));
      j["operators"].push_back(op);
    }
  return j;
}

// ---------------------------------------------------------------------------
// character tables

struct CharacterRow {
  int charge;
  int degree;
  long count;
  long oracle;
};

inline std::vector<CharacterRow> character_table(int max_degree, Flavor flavor = Flavor::xbar) {
  std::map<std::pair<int, int>, long> counts;
  for (const auto& idx : enumerate_basis(max_degree, max_degree, flavor))
    ++counts[{static_cast<int>(idx.size()), static_cast<int>(idx.degree())}];
  std::vector<CharacterRow> rows;
  for (int d = 0; d <= max_degree; ++d)
    for (int n = 0; n <= d; ++n) {
      const long oracle = rr_count(d, n);
      auto it = counts.find({n, d});
      const long c = it == counts.end() ? 0 : it->second;
      if (c == 0 && oracle == 0) continue;
      rows.push_back({n, d, c, oracle});
    }
  return rows;
}

inline std::string character_csv(const std::vector<CharacterRow>& rows) {
  std::ostringstream os;
  os << "charge,degree,count,oracle\n";
  for (const auto& r : rows) os << r.charge << ',' << r.degree << ',' << r.count << ',' << r.oracle << '\n';
  return os.str();
}

inline Json character_json(const std::vector<CharacterRow>& rows) {
  Json j = Json::array();
  for (const auto& r : rows) j.push_back({{"charge", r.charge}, {"degree", r.degree}, {"count", r.count}, {"oracle", r.oracle}});
  return j;
}

inline Json to_json(const MonomialIndex& idx) {
  return {{"flavor", flavor_name(idx.flavor)}, {"modes", idx.modes}, {"charge", idx.charge},
          {"sector", idx.sector}, {"kappas", idx.kappas}, {"text", idx.str()}};
}

inline Json to_json(const HSeries& c) {
  Json j = Json::array();
  for (const auto& q : c.coeffs()) j.push_back(q.get_str());
  return j;
}

inline Json to_json(const Combination& c) {
  Json j;
  j["order"] = c.order;
  j["terms"] = Json::array();
  for (const auto& [idx, coeff] : c.terms) j["terms"].push_back({{"monomial", to_json(idx)}, {"coefficient", to_json(coeff)}});
  return j;
}

}  // namespace dyfock
