#include "mtm/mechanisms.h"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>

namespace mtm {

std::string render_cycle(const Cycle& c, const std::vector<std::string>& type_names) {
  std::string out;
  for (size_t k = 0; k < c.agents.size(); ++k) {
    out += std::to_string(c.agents[k] + 1);
    out += "→";
    auto [t, o] = c.objs[k];
    out += (t < 0 ? std::string("e") : type_names[t]) + std::to_string(o + 1);
    out += "→";
  }
  out += std::to_string(c.agents[0] + 1);
  return out;
}

// Cycles of the functional graph p over active nodes, each rotated to start
// at its smallest member, sorted by that member.
static std::vector<std::vector<int>> functional_cycles(const std::vector<int>& p,
                                                       const std::vector<char>& active) {
  const int n = (int)p.size();
  std::vector<std::vector<int>> cycles;
  std::vector<char> state(n, 0);  // 0 fresh, 1 on current walk, 2 settled
  for (int i = 0; i < n; ++i) {
    if (!active[i] || state[i]) continue;
    std::vector<int> path;
    int u = i;
    while (state[u] == 0) {
      state[u] = 1;
      path.push_back(u);
      u = p[u];
    }
    if (state[u] == 1) {  // closed a new cycle at u
      auto it = std::find(path.begin(), path.end(), u);
      std::vector<int> cyc(it, path.end());
      auto mn = std::min_element(cyc.begin(), cyc.end());
      std::rotate(cyc.begin(), mn, cyc.end());
      cycles.push_back(std::move(cyc));
    }
    for (int v : path) state[v] = 2;
  }
  std::sort(cycles.begin(), cycles.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return cycles;
}

std::vector<int> ttc_single_type(const std::vector<std::vector<int>>& marg_order, Trace* trace,
                                 int type, bool one_cycle_per_step) {
  const int n = (int)marg_order.size();
  std::vector<int> assign(n, -1);
  std::vector<char> active(n, 1);
  std::vector<int> p(n, -1);
  int left = n;
  while (left > 0) {
    for (int i = 0; i < n; ++i)
      if (active[i])
        for (int o : marg_order[i])
          if (active[o]) {
            p[i] = o;
            break;
          }
    std::vector<std::vector<int>> cycles = functional_cycles(p, active);
    if (one_cycle_per_step) cycles.resize(1);
    if (trace) trace->steps.emplace_back();
    for (const std::vector<int>& cyc : cycles) {
      if (trace) {
        Cycle c;
        c.agents = cyc;
        for (int a : cyc) c.objs.push_back({type, p[a]});
        trace->steps.back().push_back(std::move(c));
      }
      for (int a : cyc) {
        assign[a] = p[a];
        active[a] = 0;
        --left;
      }
    }
  }
#ifndef NDEBUG
  if (!one_cycle_per_step)
    assert(assign == ttc_single_type(marg_order, nullptr, type, true));
#endif
  return assign;
}

// Marginal owner rankings per agent, deriving them for strict-kind prefs
// that happen to be separable (throws otherwise).
static std::vector<std::vector<std::vector<int>>> marginals_of(const Market& mk) {
  std::vector<std::vector<std::vector<int>>> margs;
  for (const Pref& p : mk.prefs) {
    if (p.kind == PrefKind::strict) {
      Pref q = p;
      make_separable(q, mk.shape);
      margs.push_back(q.marg_order);
    } else {
      margs.push_back(p.marg_order);
    }
  }
  return margs;
}

Allocation cttc(const Market& mk, Trace* trace) {
  const Shape& s = mk.shape;
  auto margs = marginals_of(mk);
  Allocation x;
  x.owner.assign(s.n, std::vector<int>(s.m));
  for (int t = 0; t < s.m; ++t) {
    std::vector<std::vector<int>> mo(s.n);
    for (int i = 0; i < s.n; ++i) mo[i] = margs[i][t];
    std::vector<int> got = ttc_single_type(mo, trace, t);
    for (int i = 0; i < s.n; ++i) x.owner[i][t] = got[i];
  }
  return x;
}

// Step-wise construction: agents point at the first still-present object in
// their linear list; members of a cycle take the whole endowment of the
// owner they point at.
static Allocation bttc_stepwise(const Market& mk, Trace* trace) {
  const Shape& s = mk.shape;
  std::vector<std::vector<std::pair<int, int>>> lin(s.n);
  for (int i = 0; i < s.n; ++i) lin[i] = linear_object_list(mk.prefs[i], s);
  std::vector<char> active(s.n, 1);
  std::vector<int> p(s.n, -1), got(s.n, -1);
  std::vector<std::pair<int, int>> pointed(s.n);
  int left = s.n;
  while (left > 0) {
    for (int i = 0; i < s.n; ++i)
      if (active[i])
        for (auto [t, o] : lin[i])
          if (active[o]) {
            p[i] = o;
            pointed[i] = {t, o};
            break;
          }
    std::vector<std::vector<int>> cycles = functional_cycles(p, active);
    if (trace) trace->steps.emplace_back();
    for (const std::vector<int>& cyc : cycles) {
      if (trace) {
        Cycle c;
        c.agents = cyc;
        for (int a : cyc) c.objs.push_back(pointed[a]);
        trace->steps.back().push_back(std::move(c));
      }
      for (int a : cyc) {
        got[a] = p[a];
        active[a] = 0;
        --left;
      }
    }
  }
  Allocation y;
  y.owner.assign(s.n, std::vector<int>(s.m));
  for (int i = 0; i < s.n; ++i)
    for (int t = 0; t < s.m; ++t) y.owner[i][t] = got[i];
  return y;
}

Allocation bttc(const Market& mk, Trace* trace) {
  const Shape& s = mk.shape;
  std::vector<std::vector<int>> rest(s.n);
  for (int i = 0; i < s.n; ++i) rest[i] = restrict_to_endowments(mk.prefs[i], s);
  Trace rtrace;
  std::vector<int> sigma = ttc_single_type(rest, &rtrace, -1);
  Allocation x;
  x.owner.assign(s.n, std::vector<int>(s.m));
  for (int i = 0; i < s.n; ++i)
    for (int t = 0; t < s.m; ++t) x.owner[i][t] = sigma[i];

  bool all_lex = std::all_of(mk.prefs.begin(), mk.prefs.end(),
                             [](const Pref& p) { return p.kind == PrefKind::lexicographic; });
  if (all_lex) {
    Trace strace;
    Allocation y = bttc_stepwise(mk, &strace);
    if (!(y == x))
      throw std::logic_error("bttc: step-wise and whole-endowment constructions disagree");
    if (trace) *trace = std::move(strace);
  } else if (trace) {
    *trace = std::move(rtrace);
  }
  return x;
}

Allocation no_trade(const Market& mk) { return endowment(mk.shape); }

static std::vector<int> resolve_order(std::vector<int> order, int n, const char* who) {
  if (order.empty()) {
    order.resize(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    return order;
  }
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i)
    if ((int)sorted.size() != n || sorted[i] != i)
      throw std::invalid_argument(std::string(who) + ": order must be a permutation of the agents");
  return order;
}

Allocation serial_dictatorship(const Market& mk, std::vector<int> order) {
  const Shape& s = mk.shape;
  order = resolve_order(std::move(order), s.n, "serial_dictatorship");
  std::vector<std::vector<char>> pool(s.m, std::vector<char>(s.n, 1));
  Allocation x;
  x.owner.assign(s.n, std::vector<int>(s.m));
  std::vector<Bundle> all = enumerate_bundles(s);
  for (int i : order) {
    int best = -1;
    for (const Bundle& b : all) {
      bool ok = true;
      for (int t = 0; t < s.m && ok; ++t) ok = pool[t][b[t]];
      if (!ok) continue;
      int id = bundle_id(b, s);
      if (best < 0 || mk.prefs[i].prefers(id, best)) best = id;
    }
    Bundle b = bundle_from_id(best, s);
    for (int t = 0; t < s.m; ++t) {
      x.owner[i][t] = b[t];
      pool[t][b[t]] = 0;
    }
  }
  return x;
}

Allocation multiple_serial_ir(const Market& mk, std::vector<int> order, const Guards& g) {
  const Shape& s = mk.shape;
  order = resolve_order(std::move(order), s.n, "multiple_serial_ir");
  Allocation e = endowment(s);
  std::vector<Allocation> live;
  for (Allocation& a : enumerate_allocations(s, g)) {
    bool ir = true;
    for (int i = 0; i < s.n && ir; ++i)
      ir = mk.prefs[i].weakly_prefers(bundle_of(a, i, s), bundle_of(e, i, s));
    if (ir) live.push_back(std::move(a));
  }
  for (int i : order) {
    int best = -1;
    for (const Allocation& a : live) {
      int id = bundle_of(a, i, s);
      if (best < 0 || mk.prefs[i].prefers(id, best)) best = id;
    }
    std::erase_if(live, [&](const Allocation& a) { return bundle_of(a, i, s) != best; });
  }
  assert(live.size() == 1);
  return live.front();
}

Allocation bossy_hybrid(const Market& mk) {
  const Shape& s = mk.shape;
  bool all_lex = std::all_of(mk.prefs.begin(), mk.prefs.end(),
                             [](const Pref& p) { return p.kind == PrefKind::lexicographic; });
  if (s.n != 3 || s.m != 2 || !all_lex)
    throw std::invalid_argument("bossy_hybrid: defined on n=3, m=2 lexicographic markets");
  Allocation b = bttc(mk);
  int i = mk.prefs[0].marg_order[0][0];
  if (i == 0 || mk.prefs[0].marg_order[1][0] != i) return b;  // outside R-hat
  int j = 3 - i;
  Allocation y;
  y.owner = {{i, i}, {}, {}};
  y.owner[i] = {0, j};
  y.owner[j] = {j, 0};
  bool weak = true, strict = false;
  for (int k = 0; k < 3; ++k) {
    int yb = bundle_of(y, k, s), bb = bundle_of(b, k, s);
    weak = weak && mk.prefs[k].weakly_prefers(yb, bb);
    strict = strict || mk.prefs[k].prefers(yb, bb);
  }
  return (weak && strict) ? y : b;
}

Allocation y_restricted_unanimity(const Market& mk, const Allocation& target) {
  const Shape& s = mk.shape;
  check_allocation(target, s);
  Allocation e = endowment(s);
  for (int i = 0; i < s.n; ++i)
    if (!mk.prefs[i].weakly_prefers(bundle_of(target, i, s), bundle_of(e, i, s))) return e;
  return target;
}

Allocation house_then_penalized_car(const Market& mk) {
  const Shape& s = mk.shape;
  bool common_hc =
      s.m == 2 &&
      std::all_of(mk.prefs.begin(), mk.prefs.end(), [](const Pref& p) {
        return p.kind == PrefKind::lexicographic && p.importance == std::vector<int>{0, 1};
      });
  if (!common_hc)
    throw std::invalid_argument(
        "house_then_penalized_car: defined on m=2 common-importance lexicographic markets with "
        "houses first");
  std::vector<std::vector<int>> houses(s.n), cars(s.n);
  for (int i = 0; i < s.n; ++i) {
    houses[i] = mk.prefs[i].marg_order[0];
    cars[i] = mk.prefs[i].marg_order[1];
  }
  std::vector<int> h = ttc_single_type(houses);
  if (h[0] != 0) {
    std::erase(cars[0], 0);
    cars[0].push_back(0);
  }
  std::vector<int> c = ttc_single_type(cars, nullptr, 1);
  Allocation x;
  x.owner.assign(s.n, std::vector<int>(2));
  for (int i = 0; i < s.n; ++i) x.owner[i] = {h[i], c[i]};
  return x;
}

Mechanism make_mechanism(const std::string& name, const MechanismOptions& opts) {
  if (name == "bttc") return {name, [](const Market& mk) { return bttc(mk); }};
  if (name == "cttc") return {name, [](const Market& mk) { return cttc(mk); }};
  if (name == "no_trade") return {name, no_trade};
  if (name == "serial_dictatorship")
    return {name, [o = opts.order](const Market& mk) { return serial_dictatorship(mk, o); }};
  if (name == "multiple_serial_ir")
    return {name, [o = opts.order, g = opts.guards](const Market& mk) {
              return multiple_serial_ir(mk, o, g);
            }};
  if (name == "bossy_hybrid") return {name, bossy_hybrid};
  if (name == "y_restricted_unanimity") {
    if (!opts.target)
      throw std::invalid_argument("y_restricted_unanimity: needs a target allocation");
    return {name, [y = *opts.target](const Market& mk) {
              return y_restricted_unanimity(mk, y);
            }};
  }
  if (name == "house_then_penalized_car") return {name, house_then_penalized_car};
  throw std::invalid_argument("unknown mechanism: " + name);
}

std::vector<std::string> mechanism_names() {
  return {"bttc",         "cttc",
          "no_trade",     "serial_dictatorship",
          "multiple_serial_ir", "bossy_hybrid",
          "y_restricted_unanimity", "house_then_penalized_car"};
}

}  // namespace mtm
