#pragma once

// Named check suites shared by the command-line tool, the acceptance binary
// and the tests.

#include "dyfock/qva.hpp"
#include "dyfock/report.hpp"

#include <string>
#include <vector>

namespace dyfock {

struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& w) : std::invalid_argument(w) {}
};

/// standard: the fixed battery; random: the battery plus five seeded vectors;
/// vacuum: the vacuum of F_0. Strict sector mode keeps sector-0 vectors only.
inline std::vector<FockVector> select_battery(const RunConfig& c) {
  std::vector<FockVector> out;
  if (c.battery == "vacuum") out = {FockVector::vacuum(0, c.order)};
  else if (c.battery == "standard" || c.battery == "random") {
    out = battery(c.order);
    if (c.battery == "random" || c.seed) {
      const auto extra = random_battery(c.seed.value_or(42), 5, c.order);
      out.insert(out.end(), extra.begin(), extra.end());
    }
  } else {
    throw UsageError("unknown battery: " + c.battery);
  }
  if (c.strict_sector) {
    std::vector<FockVector> kept;
    for (const auto& v : out)
      if (!v.is_zero() && v.data().begin()->first.sector == 0) kept.push_back(v);
    out = kept;
  }
  return out;
}

inline std::vector<FockVector> sector0(const std::vector<FockVector>& vs) {
  std::vector<FockVector> out;
  for (const auto& v : vs)
    if (!v.is_zero() && v.data().begin()->first.sector == 0) out.push_back(v);
  return out;
}

inline const std::vector<std::string>& relation_names() {
  static const std::vector<std::string> names = {"jps1",       "comm_int", "rtt",     "straightening",
                                                 "heisenberg", "closure",  "exchange", "all"};
  return names;
}

inline std::vector<CheckReport> run_relation(const std::string& rel, const RunConfig& c) {
  const int lo = c.window.lo, hi = c.window.hi;
  const std::size_t N = c.order;
  if (N == 0) throw UsageError("order must be positive");
  const auto vs = select_battery(c);
  std::vector<CheckReport> out;
  if (rel == "jps1") {
    RunConfig up = c;
    up.order = N + 1;
    out.push_back(check_jps1(select_battery(up), lo, hi, N));
  }
  else if (rel == "comm_int") out.push_back(check_comm_int(vs, lo, hi, N));
  else if (rel == "rtt") {
    const std::vector<FockVector> pair = {FockVector::vacuum(0, N),
                                          FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N)};
    for (Variant v : {Variant::IK, Variant::norm})
      for (RttPattern p : {RttPattern::pp, RttPattern::mm, RttPattern::pm}) {
        CheckReport r = check_rtt(p, pair, lo, hi, N, v);
        r.params["variant"] = variant_name(v);
        out.push_back(r);
      }
  } else if (rel == "straightening") {
    for (int r = -1; r >= -4; --r) out.push_back(check_straightening_ids(r, vs, N));
  } else if (rel == "heisenberg") {
    out.push_back(check_heisenberg(vs, lo, hi, N));
  } else if (rel == "closure") {
    for (Closure cl : {Closure::e_plus, Closure::cal_e_minus, Closure::x_malpha}) {
      CheckReport r = check_closure(cl, {-1, 0, 1}, {}, lo, hi, N);
      r.params["closure"] = closure_name(cl);
      out.push_back(r);
    }
    CheckReport r = check_closure(Closure::lambda1, {}, sector0(vs), lo, hi, N);
    r.params["closure"] = closure_name(Closure::lambda1);
    out.push_back(r);
    out.push_back(check_translation(vs, lo, hi, N));
  } else if (rel == "exchange") {
    for (Exchange e : {Exchange::e_plus_e_minus, Exchange::e_zero_e_zero, Exchange::ebar_plus_e_minus,
                       Exchange::ebar_zero_e_zero}) {
      CheckReport r = check_exchange(e, vs, lo, hi, N);
      r.params["exchange"] = exchange_name(e);
      out.push_back(r);
    }
  } else if (rel == "all") {
    for (const auto& name : relation_names())
      if (name != "all") {
        const auto part = run_relation(name, c);
        out.insert(out.end(), part.begin(), part.end());
      }
  } else {
    throw UsageError("unknown relation: " + rel);
  }
  return out;
}

inline std::vector<StateSpec> arity_one_states(int max_power) {
  std::vector<StateSpec> out;
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j)
      for (int k = 0; k <= max_power; ++k) {
        StateSpec s;
        s.arity = 1;
        s.entries[0] = {i, j};
        s.powers = {k, 0};
        out.push_back(s);
      }
  return out;
}

/// Arity-2 states over all entry pairs at the given u-powers.
inline std::vector<StateSpec> arity_two_states(std::array<int, 2> powers) {
  std::vector<StateSpec> out;
  for (int a = 0; a < 16; ++a) {
    StateSpec s;
    s.arity = 2;
    s.entries = {{{1 + (a >> 3 & 1), 1 + (a >> 2 & 1)}, {1 + (a >> 1 & 1), 1 + (a & 1)}}};
    s.powers = powers;
    out.push_back(s);
  }
  return out;
}

inline const std::vector<std::string>& qva_names() {
  static const std::vector<std::string> names = {"restricted", "ymap", "classical", "kstate"};
  return names;
}

inline std::vector<CheckReport> run_qva(const std::string& sub, const RunConfig& c) {
  const int lo = c.window.lo, hi = c.window.hi;
  const std::size_t N = c.order;
  if (N == 0) throw UsageError("order must be positive");
  std::vector<CheckReport> out;
  if (sub == "restricted") out.push_back(check_restricted(select_battery(c), N));
  else if (sub == "ymap") {
    auto states = arity_one_states(1);
    const auto two = arity_two_states({0, 1});
    states.insert(states.end(), two.begin(), two.begin() + 4);
    out.push_back(check_vacuum_axiom(select_battery(c), states, std::max(hi, 1), N));
    if (N > 1) {
      const std::vector<FockVector> vs = {FockVector::vacuum(0, N),
                                          FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N)};
      out.push_back(check_y_truncation(arity_one_states(1), vs, lo, hi, N, N - 1));
    }
  } else if (sub == "classical") {
    std::vector<StateSpec> states = arity_two_states({0, 0});
    const auto shifted = arity_two_states({1, 0});
    states.insert(states.end(), shifted.begin(), shifted.begin() + 4);
    const std::vector<FockVector> vs = {FockVector::vacuum(0, 1),
                                        FockVector::basis(LatticePoint::make(0, 1), AMonomial(), 1),
                                        FockVector::vacuum(1, 1)};
    out.push_back(check_normal_ordered_limit(vs, states, lo, hi));
  } else if (sub == "kstate") {
    auto vs = select_battery(c);
    vs.resize(std::min<std::size_t>(vs.size(), 6));
    out.push_back(check_k_state(vs, 1, lo, hi, N));
  } else if (sub == "all") {
    for (const auto& name : qva_names()) {
      const auto part = run_qva(name, c);
      out.insert(out.end(), part.begin(), part.end());
    }
  } else {
    throw UsageError("unknown qva subcommand: " + sub);
  }
  return out;
}

}  // namespace dyfock
