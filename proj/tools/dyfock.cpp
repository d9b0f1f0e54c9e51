// Command-line front end: verification suites, basis computations, QVA checks
// and the catalog dump. Exit codes: 0 pass, 1 check failure, 2 usage error.

#include "dyfock/cache.hpp"
#include "dyfock/suites.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace dyfock;

namespace {

std::vector<int> parse_modes(const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    int r = 0;
    try {
      r = std::stoi(tok, &used);
    } catch (const std::logic_error&) {
      throw UsageError("bad mode: " + tok);
    }
    if (used != tok.size()) throw UsageError("bad mode: " + tok);
    out.push_back(r);
  }
  return out;
}

std::string combination_text(const Combination& c) {
  if (c.terms.empty()) return "0\n";
  std::ostringstream os;
  for (const auto& [idx, coeff] : c.terms) {
    os << '(';
    for (std::size_t k = 0; k < coeff.order(); ++k) os << (k ? ", " : "") << coeff[k].get_str();
    os << ") " << idx.str() << '\n';
  }
  return os.str();
}

int emit_reports(const RunConfig& c, const std::vector<CheckReport>& reports) {
  if (c.format == "text") std::cout << suite_text(reports);
  else std::cout << suite_json(c, reports).dump(2) << '\n';
  for (const auto& r : reports)
    if (!r.passed) return 1;
  return 0;
}

struct Options {
  RunConfig cfg;
  std::string config_file;
  std::string window = "-3:3";
  std::uint64_t seed = 0;
  CLI::Option* order_opt = nullptr;
  CLI::Option* window_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* battery_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* strict_opt = nullptr;
  CLI::Option* cache_opt = nullptr;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config_file, "JSON run configuration; flags override it")->check(CLI::ExistingFile);
  o.order_opt = app->add_option("--order,-N", o.cfg.order, "truncation order N (work mod h^N)");
  o.window_opt = app->add_option("--window", o.window, "exponent window lo:hi")->allow_extra_args(false);
  o.seed_opt = app->add_option("--seed", o.seed, "seed for five extra random vectors");
  o.battery_opt = app->add_option("--battery", o.cfg.battery, "standard, random or vacuum");
  o.format_opt = app->add_option("--format", o.cfg.format, "json, text or csv");
  o.strict_opt = app->add_flag("--strict-sector", o.cfg.strict_sector, "use sector-0 vectors only");
  o.cache_opt = app->add_option("--cache-dir", o.cfg.cache_dir, "memo directory (DYFOCK_CACHE_DIR overrides)");
}

/// Config file first, then explicit flags.
RunConfig resolve(const Options& o, const std::string& command, const std::string& selector) {
  RunConfig c;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw UsageError(std::string("configuration: ") + e.what());
    }
    c = run_config_from_json(j);
  }
  if (o.order_opt->count()) c.order = o.cfg.order;
  if (o.window_opt->count()) c.window = parse_window(o.window);
  if (o.seed_opt->count()) c.seed = o.seed;
  if (o.battery_opt->count()) c.battery = o.cfg.battery;
  if (o.format_opt->count()) c.format = o.cfg.format;
  if (o.strict_opt->count()) c.strict_sector = o.cfg.strict_sector;
  if (o.cache_opt->count()) c.cache_dir = o.cfg.cache_dir;
  c.command = command;
  if (!selector.empty()) c.selector = selector;
  if (c.format != "json" && c.format != "text" && c.format != "csv") throw UsageError("unknown format: " + c.format);
  if (c.order == 0) throw UsageError("order must be positive");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact level-1 Fock module engine for the double Yangian DY(gl2)"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  Options vo, bo, qo, co;

  std::string rel = "all";
  auto* verify = app.add_subcommand("verify", "run relation suites");
  verify->add_option("--rel", rel, "jps1, comm_int, rtt, straightening, heisenberg, closure, exchange or all");
  add_common(verify, vo);

  std::string bsub, modes_text, flavor = "xbar";
  int max_degree = 6, max_charge = -1, sector = 0;
  long stage = 1;
  auto* basis_cmd = app.add_subcommand("basis", "monomial bases and character tables");
  basis_cmd->add_option("subcommand", bsub, "enumerate, straighten, char, rank or stage")->required();
  basis_cmd->add_option("--modes", modes_text, "comma-separated modes r_1,...,r_n (r_1 acts first)");
  basis_cmd->add_option("--max-degree", max_degree, "largest degree");
  basis_cmd->add_option("--max-charge", max_charge, "largest number of modes");
  basis_cmd->add_option("--flavor", flavor, "x, xbar or xtilde");
  basis_cmd->add_option("--sector", sector, "sector 0 or 1");
  basis_cmd->add_option("--stage", stage, "stage m of e^(m alpha) b");
  bool trace = false;
  basis_cmd->add_flag("--trace", trace, "log straightening rewrites as JSON lines on stderr");
  add_common(basis_cmd, bo);

  std::string qsub;
  auto* qva_cmd = app.add_subcommand("qva", "restrictedness and vertex operator checks");
  qva_cmd->add_option("subcommand", qsub, "restricted, ymap, classical, kstate or all")->required();
  add_common(qva_cmd, qo);

  auto* catalog_cmd = app.add_subcommand("catalog", "dump the operator catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const Options& o = verify->parsed() ? vo : basis_cmd->parsed() ? bo : qo;
    RunConfig cfg;
    if (!catalog_cmd->parsed()) {
      const std::string command = verify->parsed() ? "verify" : basis_cmd->parsed() ? "basis" : "qva";
      cfg = resolve(o, command, verify->parsed() ? rel : basis_cmd->parsed() ? bsub : qsub);
    }
    std::unique_ptr<DiskCache> cache;
    const std::string dir = DiskCache::resolve_dir(cfg.cache_dir);
    if (!dir.empty()) cache = std::make_unique<DiskCache>(dir);
    MemoGuard guard(cache.get());

    if (catalog_cmd->parsed()) {
      std::cout << catalog_json().dump(2) << '\n';
      return 0;
    }
    if (verify->parsed()) return emit_reports(cfg, run_relation(cfg.selector, cfg));
    if (qva_cmd->parsed()) return emit_reports(cfg, run_qva(cfg.selector, cfg));

    const Flavor fl = parse_flavor(flavor);
    if (sector != 0 && sector != 1) throw UsageError("sector must be 0 or 1");
    if (bsub == "enumerate") {
      const auto list = enumerate_basis(max_degree, max_charge < 0 ? max_degree : max_charge, fl, sector);
      if (cfg.format == "json") {
        Json j = Json::array();
        for (const auto& idx : list) j.push_back(to_json(idx));
        std::cout << j.dump(2) << '\n';
      } else {
        for (const auto& idx : list) std::cout << idx.str() << '\n';
      }
      return 0;
    }
    if (bsub == "straighten") {
      MonomialIndex idx;
      idx.flavor = Flavor::xbar;
      idx.modes = parse_modes(modes_text);
      std::vector<std::string> log;
      const Combination c = straighten(idx, cfg.order, 1000000, trace ? &log : nullptr);
      for (const auto& line : log) std::cerr << line << '\n';
      if (cfg.format == "json") std::cout << to_json(c).dump(2) << '\n';
      else std::cout << combination_text(c);
      return 0;
    }
    if (bsub == "char") {
      const auto rows = character_table(max_degree, fl);
      bool ok = true;
      for (const auto& r : rows) ok = ok && r.count == r.oracle;
      if (cfg.format == "csv") std::cout << character_csv(rows);
      else if (cfg.format == "json") std::cout << character_json(rows).dump(2) << '\n';
      else
        for (const auto& r : rows)
          std::cout << "n=" << r.charge << " d=" << r.degree << " count=" << r.count << " oracle=" << r.oracle << '\n';
      return ok ? 0 : 1;
    }
    if (bsub == "rank") {
      bool ok = true;
      Json j = Json::array();
      for (int d = 0; d <= max_degree; ++d)
        for (int n = 0; n <= (max_charge < 0 ? d : max_charge); ++n) {
          const auto [rank, expected] = classical_rank(d, n);
          if (expected == 0 && rank == 0) continue;
          ok = ok && static_cast<long>(rank) == expected;
          j.push_back({{"degree", d}, {"charge", n}, {"rank", rank}, {"expected", expected}});
        }
      if (cfg.format == "json") std::cout << j.dump(2) << '\n';
      else
        for (const auto& row : j)
          std::cout << "d=" << row["degree"] << " n=" << row["charge"] << " rank=" << row["rank"]
                    << " expected=" << row["expected"] << '\n';
      return ok ? 0 : 1;
    }
    if (bsub == "stage") {
      MonomialIndex b;
      b.flavor = Flavor::xtilde;
      b.sector = sector;
      b.modes = parse_modes(modes_text);
      const MonomialIndex from = stage_form(sector, stage, b);
      const MonomialIndex to = semi_infinite_stage(sector, stage, b);
      const bool same = evaluate_monomial(from, cfg.order) == evaluate_monomial(to, cfg.order);
      if (cfg.format == "json")
        std::cout << Json{{"from", to_json(from)}, {"to", to_json(to)}, {"equal", same}}.dump(2) << '\n';
      else
        std::cout << from.str() << " = " << to.str() << (same ? "" : "  MISMATCH") << '\n';
      return same ? 0 : 1;
    }
    throw UsageError("unknown basis subcommand: " + bsub);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
}
