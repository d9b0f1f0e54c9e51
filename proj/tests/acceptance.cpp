// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include "dyfock/cache.hpp"
#include "dyfock/suites.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>

using namespace dyfock;

namespace {

/// Partitions of d into exactly n parts, pairwise differing by at least 2, all parts <= max_part.
long gap2(int d, int n, int max_part) {
  if (n == 0) return d == 0 ? 1 : 0;
  long total = 0;
  for (int p = std::min(d, max_part); p >= 1; --p) total += gap2(d - p, n - 1, p - 2);
  return total;
}

long gap2(int d, int n) { return gap2(d, n, d); }

long gap2_all(int d) {
  long total = 0;
  for (int n = 0; n <= d; ++n) total += gap2(d, n);
  return total;
}

long plain_partitions(int d, int max_part) {
  if (d == 0) return 1;
  long total = 0;
  for (int p = std::min(d, max_part); p >= 1; --p) total += plain_partitions(d - p, p);
  return total;
}

bool all_pass(const std::vector<CheckReport>& reports, std::string& why) {
  for (const auto& r : reports)
    if (!r.passed) {
      why = r.relation + ": " + r.first_discrepancy;
      return false;
    }
  return !reports.empty();
}

RunConfig config(const std::string& battery, std::size_t N, int lo, int hi) {
  RunConfig c;
  c.battery = battery;
  c.order = N;
  c.window = {lo, hi};
  return c;
}

int failures = 0;

void criterion(int k, const std::string& title, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string why;
  bool ok = false;
  try {
    ok = body(why);
  } catch (const std::exception& e) {
    why = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << k << ": " << title << " (" << std::fixed
            << std::setprecision(1) << secs << " s)";
  if (!ok) {
    std::cout << " -- " << why;
    ++failures;
  }
  std::cout << std::endl;
}

}  // namespace

int main() {
  criterion(1, "level-1 defining relation", [](std::string& why) {
    RunConfig c = config("random", 2, -4, 4);
    c.seed = 42;
    if (!all_pass(run_relation("jps1", c), why)) return false;
    return all_pass(run_relation("jps1", config("vacuum", 3, -4, 4)), why);
  });

  criterion(2, "commutativity and integrability of Xbar", [](std::string& why) {
    return all_pass(run_relation("comm_int", config("standard", 3, -5, 5)), why);
  });

  criterion(3, "RTT relations, both realizations", [](std::string& why) {
    const auto reports = run_relation("rtt", config("standard", 2, -3, 3));
    return reports.size() == 6 && all_pass(reports, why);
  });

  criterion(4, "exchange, closure, translation and Heisenberg identities", [](std::string& why) {
    const RunConfig c = config("standard", 2, -3, 3);
    for (const char* rel : {"exchange", "closure", "heisenberg"})
      if (!all_pass(run_relation(rel, c), why)) return false;
    return true;
  });

  criterion(5, "straightening of two-factor Xbar monomials", [](std::string& why) {
    for (std::size_t m = 1; m <= 3; ++m)
      for (int a = -1; a >= -5; --a)
        for (int b = -1; b >= -5; --b) {
          MonomialIndex idx;
          idx.modes = {a, b};
          const Combination c = straighten(idx, m);
          for (const auto& [k, coeff] : c.terms)
            if (!k.admissible()) {
              why = "inadmissible output " + k.str();
              return false;
            }
          FockVector diff = evaluate_monomial(idx, m);
          diff -= evaluate(c);
          if (!diff.is_zero()) {
            why = idx.str() + " m=" + std::to_string(m);
            return false;
          }
        }
    return true;
  });

  criterion(6, "admissible monomial counts equal gap-2 partition counts", [](std::string& why) {
    if (gap2_all(5) != 2 || gap2_all(8) != 4 || rr_count(5) != gap2_all(5) || rr_count(8) != gap2_all(8)) {
      why = "rr(5) or rr(8)";
      return false;
    }
    std::map<std::pair<int, int>, long> counts;
    for (const auto& idx : enumerate_basis(12, 12))
      ++counts[{static_cast<int>(idx.degree()), static_cast<int>(idx.size())}];
    for (int d = 0; d <= 12; ++d)
      for (int n = 0; n <= d; ++n) {
        const long got = counts.count({d, n}) ? counts.at({d, n}) : 0;
        if (got != gap2(d, n)) {
          why = "d=" + std::to_string(d) + " n=" + std::to_string(n);
          return false;
        }
      }
    return true;
  });

  criterion(7, "classical-limit independence of the admissible monomials", [](std::string& why) {
    for (int d = 0; d <= 6; ++d)
      for (int n = 0; n <= d; ++n) {
        const auto [rank, expected] = classical_rank(d, n);
        if (static_cast<long>(rank) != gap2(d, n) || expected != gap2(d, n)) {
          why = "d=" + std::to_string(d) + " n=" + std::to_string(n) + " rank=" + std::to_string(rank);
          return false;
        }
      }
    return true;
  });

  criterion(8, "semi-infinite stages and descent tails", [](std::string& why) {
    for (int sector = 0; sector <= 1; ++sector) {
      for (const auto& b : enumerate_basis(5, 5, Flavor::xtilde, sector))
        for (long m = 0; m <= 2; ++m) {
          const MonomialIndex from = stage_form(sector, m, b), to = semi_infinite_stage(sector, m, b);
          if (!(evaluate_monomial(from, 2) == evaluate_monomial(to, 2))) {
            why = from.str() + " vs " + to.str();
            return false;
          }
        }
      for (int k = 1; k <= 6; ++k) {
        const auto tail = descent_tail(sector, k);
        if (static_cast<int>(tail.size()) != k) return false;
        for (int j = 0; j < k; ++j)
          if (tail[j] != -1 - sector - 2 * j) {
            why = "tail parity, sector " + std::to_string(sector);
            return false;
          }
      }
    }
    return true;
  });

  criterion(9, "Heisenberg layer", [](std::string& why) {
    if (!all_pass(run_relation("heisenberg", config("standard", 2, -3, 3)), why)) return false;
    std::vector<MonomialIndex> sources(3);
    sources[1].modes = {-1};
    sources[2].modes = {-3, -1};
    for (auto& s : sources) s.flavor = Flavor::x;
    for (const auto& s : sources)
      for (int a = 1; a <= 3; ++a)
        for (int b = a + 1; b <= 3; ++b)
          if (!(heisenberg_extend(s, {a, b}, 3) == heisenberg_extend(s, {b, a}, 3))) {
            why = "kappa commutation on " + s.str();
            return false;
          }
    for (int D = 0; D <= 4; ++D)
      for (int n = 0; n <= 2; ++n) {
        long expected = 0;
        for (int d1 = 0; d1 <= D; ++d1) expected += plain_partitions(d1, d1) * gap2(D - d1, n);
        const auto [rank, reported] = extended_rank(D, n);
        if (static_cast<long>(rank) != expected || reported != expected) {
          why = "extended rank D=" + std::to_string(D) + " n=" + std::to_string(n);
          return false;
        }
      }
    return true;
  });

  criterion(10, "restricted modules and module vertex operators", [](std::string& why) {
    if (!all_pass(run_qva("restricted", config("standard", 3, -3, 3)), why)) return false;
    return all_pass(run_qva("all", config("standard", 2, -3, 3)), why);
  });

  criterion(11, "stability, cache transparency and deterministic reports", [](std::string& why) {
    // verdicts keyed by suite, relation and position within the suite
    using Verdicts = std::map<std::string, bool>;
    const std::vector<std::pair<int, std::size_t>> pairs = {{2, 1}, {3, 2}};
    std::vector<Verdicts> verdicts;
    for (const auto& [w, N] : pairs) {
      Verdicts v;
      const RunConfig c = config("standard", N, -w, w);
      auto record = [&v](const std::string& suite, const std::vector<CheckReport>& reports) {
        for (std::size_t i = 0; i < reports.size(); ++i)
          v[suite + "/" + reports[i].relation + "#" + std::to_string(i)] = reports[i].passed;
      };
      for (const auto& name : relation_names())
        if (name != "all") record(name, run_relation(name, c));
      for (const auto& name : qva_names()) record(name, run_qva(name, c));
      verdicts.push_back(v);
    }
    // order coherence compares N with N - 1, so it has no report at N = 1
    const std::string order_only = "ymap/qva_truncation#1";
    for (const auto& [key, passed] : verdicts[1]) {
      auto it = verdicts[0].find(key);
      if (it == verdicts[0].end() ? key != order_only : it->second != passed) {
        why = "verdicts differ between window/order pairs at " + key;
        return false;
      }
    }
    for (const auto& [key, passed] : verdicts[0])
      if (!verdicts[1].count(key)) {
        why = "report missing at the larger window/order: " + key;
        return false;
      }
    if (!verdicts[1].count(order_only)) {
      why = "order coherence report missing at order 2";
      return false;
    }

    RunConfig c = config("standard", 2, -3, 3);
    c.command = "verify";
    c.selector = "exchange";
    const std::string plain = suite_json(c, run_relation("exchange", c)).dump(2);
    if (suite_json(c, run_relation("exchange", c)).dump(2) != plain) {
      why = "repeated run differs";
      return false;
    }
    const auto dir = std::filesystem::temp_directory_path() /
                     ("dyfock-acceptance-" + std::to_string(std::random_device{}()));
    std::string cold, warm;
    std::size_t hits = 0;
    {
      DiskCache cache(dir);
      MemoGuard guard(&cache);
      detail::creation_cache().clear();
      cold = suite_json(c, run_relation("exchange", c)).dump(2);
    }
    {
      DiskCache cache(dir);
      MemoGuard guard(&cache);
      warm = suite_json(c, run_relation("exchange", c)).dump(2);
      hits = cache.hits();
    }
    std::filesystem::remove_all(dir);
    if (cold != plain || warm != plain || hits == 0) {
      why = "cache changed the report or was never hit";
      return false;
    }
    return true;
  });

  std::cout << (failures ? "acceptance: FAILED\n" : "acceptance: all criteria passed\n");
  return failures ? 1 : 0;
}
