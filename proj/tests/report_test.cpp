#include "dyfock/cache.hpp"
#include "dyfock/suites.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace dyfock;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("dyfock-test-" + tag + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Window, Parsing) {
  const Window w = parse_window("-5:5");
  EXPECT_EQ(w.lo, -5);
  EXPECT_EQ(w.hi, 5);
  EXPECT_EQ(window_str(parse_window("-3:-1")), "-3:-1");
  EXPECT_THROW(parse_window("5:-5"), std::invalid_argument);
  EXPECT_THROW(parse_window("1-2"), std::invalid_argument);
  EXPECT_THROW(parse_window("a:2"), std::invalid_argument);
}

TEST(RunConfigJson, RoundTripWithoutCacheDir) {
  RunConfig c;
  c.command = "verify";
  c.selector = "comm_int";
  c.order = 3;
  c.window = {-5, 5};
  c.seed = 42;
  c.cache_dir = "/tmp/somewhere";
  c.strict_sector = true;
  const Json j = to_json(c);
  EXPECT_FALSE(j.contains("cache_dir"));
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_THROW(run_config_from_json(Json::array()), std::invalid_argument);
}

TEST(SuiteJson, SortedAndDeterministic) {
  CheckReport a, b;
  a.relation = "zeta";
  b.relation = "alpha";
  b.params["k"] = "1";
  RunConfig c;
  const Json j1 = suite_json(c, {a, b});
  const Json j2 = suite_json(c, {b, a});
  EXPECT_EQ(j1.dump(2), j2.dump(2));
  EXPECT_EQ(j1["reports"][0]["relation"], "alpha");
  EXPECT_EQ(j1["schema"], report_schema_version);
  EXPECT_TRUE(j1["passed"].get<bool>());
  a.fail("somewhere");
  EXPECT_FALSE(suite_json(c, {a, b})["passed"].get<bool>());
}

TEST(SuiteText, OneLinePerReport) {
  CheckReport a;
  a.relation = "jps1";
  a.fail("u^1 v^2");
  const std::string t = suite_text({a});
  EXPECT_EQ(t.rfind("FAIL jps1", 0), 0u);
  EXPECT_NE(t.find("u^1 v^2"), std::string::npos);
}

TEST(Suites, UnknownSelectorsAreUsageErrors) {
  RunConfig c;
  EXPECT_THROW(run_relation("nothing", c), UsageError);
  EXPECT_THROW(run_qva("nothing", c), UsageError);
  c.battery = "odd";
  EXPECT_THROW(select_battery(c), UsageError);
}

TEST(Suites, StrictSectorKeepsSectorZero) {
  RunConfig c;
  c.strict_sector = true;
  const auto vs = select_battery(c);
  ASSERT_FALSE(vs.empty());
  for (const auto& v : vs) EXPECT_EQ(v.data().begin()->first.sector, 0);
  EXPECT_LT(vs.size(), battery(c.order).size());
}

TEST(Suites, ClassicalLayerPasses) {
  RunConfig c;
  c.order = 1;
  c.window = {-2, 2};
  for (const auto& r : run_relation("all", c)) EXPECT_TRUE(r.passed) << r.relation << ": " << r.first_discrepancy;
}

TEST(Catalog, DumpListsNormOnlyEntriesOnce) {
  const Json j = catalog_json();
  EXPECT_EQ(j["version"], catalog_version);
  int xbar = 0, x_alpha = 0;
  for (const auto& op : j["operators"]) {
    if (op["name"] == "Xbar") ++xbar;
    if (op["name"] == "X_alpha") ++x_alpha;
  }
  EXPECT_EQ(xbar, 1);
  EXPECT_EQ(x_alpha, 2);
  EXPECT_EQ(catalog_json().dump(), j.dump());
}

TEST(CharacterTable, CsvAgreesWithOracle) {
  const auto rows = character_table(8);
  for (const auto& r : rows) EXPECT_EQ(r.count, r.oracle) << r.degree << "," << r.charge;
  const std::string csv = character_csv(rows);
  EXPECT_EQ(csv.rfind("charge,degree,count,oracle\n", 0), 0u);
  EXPECT_NE(csv.find("\n2,8,3,3\n"), std::string::npos);
}

TEST(CombinationJson, StraightenedForm) {
  MonomialIndex idx;
  idx.modes = {-2, -2};
  const Json j = to_json(straighten(idx, 1));
  ASSERT_EQ(j["terms"].size(), 1u);
  EXPECT_EQ(j["terms"][0]["monomial"]["modes"], Json::array({-1, -3}));
  EXPECT_EQ(j["terms"][0]["coefficient"], Json::array({"-2"}));
}

TEST(Cache, ExpansionRoundTrip) {
  const FockVector v = random_vector(5, 0, 2);
  const Expansion e = expand(catalog("X_alpha"), v, 3, 2);
  const Expansion back = parse_expansion(serialize(e));
  EXPECT_EQ(back.lowest, e.lowest);
  EXPECT_EQ(back.hi, e.hi);
  EXPECT_EQ(back.order, e.order);
  ASSERT_EQ(back.terms.size(), e.terms.size());
  for (const auto& [p, w] : e.terms) EXPECT_EQ(back.terms.at(p), w);
  EXPECT_THROW(parse_expansion("garbage"), std::invalid_argument);
}

TEST(Cache, HitsAndKeyCheck) {
  const auto dir = fresh_dir("keys");
  DiskCache cache(dir);
  Expansion e;
  e.hi = 2;
  e.order = 1;
  e.terms.emplace(0, FockVector::vacuum(0, 1));
  Expansion out;
  EXPECT_FALSE(cache.get("k1", out));
  cache.put("k1", e);
  EXPECT_TRUE(cache.get("k1", out));
  EXPECT_EQ(out.terms.at(0), FockVector::vacuum(0, 1));
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.stores(), 1u);
  // a file whose stored key differs is a miss
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    std::filesystem::rename(entry.path(), dir / (hex64(fnv1a("k2")) + ".exp"));
  EXPECT_FALSE(cache.get("k2", out));
  std::filesystem::remove_all(dir);
}

TEST(Cache, TransparentForReports) {
  RunConfig c;
  c.order = 2;
  c.window = {-2, 2};
  c.battery = "vacuum";
  const std::string plain = suite_json(c, run_relation("exchange", c)).dump();
  const auto dir = fresh_dir("transparent");
  for (int pass = 0; pass < 2; ++pass) {
    DiskCache cache(dir);
    MemoGuard guard(&cache);
    EXPECT_EQ(suite_json(c, run_relation("exchange", c)).dump(), plain);
    if (pass == 0) EXPECT_GT(cache.stores(), 0u);
    else EXPECT_GT(cache.hits(), 0u);
  }
  EXPECT_EQ(expand_memo(), nullptr);
  std::filesystem::remove_all(dir);
}

TEST(Cache, EnvironmentOverridesDirectory) {
  ::setenv("DYFOCK_CACHE_DIR", "/tmp/from-env", 1);
  EXPECT_EQ(DiskCache::resolve_dir("/tmp/requested"), "/tmp/from-env");
  ::unsetenv("DYFOCK_CACHE_DIR");
  EXPECT_EQ(DiskCache::resolve_dir("/tmp/requested"), "/tmp/requested");
  EXPECT_EQ(DiskCache::resolve_dir(""), "");
}
