#include "mtm/properties.h"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mtm {

static std::vector<int> bundles_of(const Allocation& a, const Shape& s) {
  std::vector<int> b(s.n);
  for (int i = 0; i < s.n; ++i) b[i] = bundle_of(a, i, s);
  return b;
}

// Strict gainers of y over a, or empty when y is no Pareto improvement.
static std::vector<int> pareto_gainers(const Allocation& y, const Allocation& a,
                                       const Market& mk) {
  const Shape& s = mk.shape;
  std::vector<int> strict;
  for (int i = 0; i < s.n; ++i) {
    int yb = bundle_of(y, i, s), ab = bundle_of(a, i, s);
    if (mk.prefs[i].prefers(ab, yb)) return {};
    if (mk.prefs[i].prefers(yb, ab)) strict.push_back(i);
  }
  return strict;
}

PropertyResult is_individually_rational(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  Allocation e = endowment(s);
  for (int i = 0; i < s.n; ++i)
    if (mk.prefs[i].prefers(bundle_of(e, i, s), bundle_of(a, i, s)))
      return {false, ImprovementWitness{"ir", e, {i}, {}}};
  return {};
}

PropertyResult is_pareto_efficient(const Allocation& a, const Market& mk, const Guards& g,
                                   const std::vector<Allocation>* pool) {
  std::vector<Allocation> own;
  if (!pool) {
    own = enumerate_allocations(mk.shape, g);
    pool = &own;
  }
  for (const Allocation& y : *pool) {
    if (y == a) continue;
    std::vector<int> strict = pareto_gainers(y, a, mk);
    if (!strict.empty()) return {false, ImprovementWitness{"pareto", y, strict, {}}};
  }
  return {};
}

PropertyResult is_coordinatewise_efficient(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  std::vector<int> base(s.n);
  std::iota(base.begin(), base.end(), 0);
  for (int t = 0; t < s.m; ++t) {
    std::vector<int> col = base;
    do {
      Allocation y = a;
      for (int i = 0; i < s.n; ++i) y.owner[i][t] = col[i];
      if (y == a) continue;
      std::vector<int> strict = pareto_gainers(y, a, mk);
      if (!strict.empty()) return {false, ImprovementWitness{"coordinatewise", y, strict, {t}}};
    } while (std::next_permutation(col.begin(), col.end()));
  }
  return {};
}

PropertyResult is_pairwise_coordinatewise_efficient(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      for (int t = 0; t < s.m; ++t) {
        Allocation y = a;
        std::swap(y.owner[i][t], y.owner[j][t]);
        if (mk.prefs[i].prefers(bundle_of(y, i, s), bundle_of(a, i, s)) &&
            mk.prefs[j].prefers(bundle_of(y, j, s), bundle_of(a, j, s)))
          return {false, ImprovementWitness{"pairwise-coordinatewise", y, {i, j}, {t}}};
      }
  return {};
}

PropertyResult is_pairwise_efficient(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j) {
      Allocation y = a;
      std::swap(y.owner[i], y.owner[j]);
      if (mk.prefs[i].prefers(bundle_of(y, i, s), bundle_of(a, i, s)) &&
          mk.prefs[j].prefers(bundle_of(y, j, s), bundle_of(a, j, s)))
        return {false, ImprovementWitness{"pairwise", y, {i, j}, {}}};
    }
  return {};
}

PropertyResult is_coalitionally_efficient(const Allocation& a, const Market& mk,
                                          bool literal_reading) {
  const Shape& s = mk.shape;
  std::vector<int> ab = bundles_of(a, s);
  PropertyResult res;
  auto try_order = [&](const std::vector<int>& ord) {
    if (literal_reading) {
      for (size_t l = 0; l < ord.size(); ++l) {
        int nxt = ord[(l + 1) % ord.size()];
        if (!mk.prefs[ord[l]].prefers(ab[ord[l]], ab[nxt])) return false;
      }
      res = {false, ImprovementWitness{"coalitional-literal", a, ord, {}}};
      return true;
    }
    Allocation y = a;
    for (size_t l = 0; l < ord.size(); ++l)
      y.owner[ord[l]] = a.owner[ord[(l + 1) % ord.size()]];
    for (int i : ord)
      if (!mk.prefs[i].prefers(bundle_of(y, i, s), ab[i])) return false;
    res = {false, ImprovementWitness{"coalitional", y, ord, {}}};
    return true;
  };
  // coalitions by size, members lexicographic; the smallest member leads the
  // rotation order, which dedups cyclic shifts of the same cycle
  for (int K = 2; K <= s.n; ++K) {
    std::vector<int> comb;
    std::function<bool(int)> rec = [&](int start) -> bool {
      if ((int)comb.size() == K) {
        std::vector<int> tail(comb.begin() + 1, comb.end());
        do {
          std::vector<int> ord{comb[0]};
          ord.insert(ord.end(), tail.begin(), tail.end());
          if (try_order(ord)) return true;
        } while (std::next_permutation(tail.begin(), tail.end()));
        return false;
      }
      for (int v = start; v < s.n; ++v) {
        comb.push_back(v);
        if (rec(v + 1)) return true;
        comb.pop_back();
      }
      return false;
    };
    if (rec(0)) return res;
  }
  return {};
}

PropertyResult is_tprime_pairwise_efficient(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      for (unsigned mask = 1; mask + 1 < (1u << s.m); ++mask) {  // nonempty strict subsets
        Allocation y = a;
        std::vector<int> ts;
        for (int t = 0; t < s.m; ++t)
          if (mask >> t & 1) {
            std::swap(y.owner[i][t], y.owner[j][t]);
            ts.push_back(t);
          }
        if (mk.prefs[i].prefers(bundle_of(y, i, s), bundle_of(a, i, s)) &&
            mk.prefs[j].prefers(bundle_of(y, j, s), bundle_of(a, j, s)))
          return {false, ImprovementWitness{"tprime-pairwise", y, {i, j}, ts}};
      }
  return {};
}

PropertyResult unanimity_check(const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  // a unanimously best allocation must give every agent their global top
  // bundle (each bundle is reachable in some allocation), so one exists iff
  // handing out the tops is feasible
  Allocation u;
  u.owner.resize(s.n);
  for (int i = 0; i < s.n; ++i) u.owner[i] = bundle_from_id(mk.prefs[i].top(), s);
  for (int t = 0; t < s.m; ++t) {
    std::vector<char> seen(s.n, 0);
    for (int i = 0; i < s.n; ++i) {
      if (seen[u.owner[i][t]]) return {};
      seen[u.owner[i][t]] = 1;
    }
  }
  if (u == a) return {};
  std::vector<int> all(s.n);
  std::iota(all.begin(), all.end(), 0);
  return {false, ImprovementWitness{"unanimity", u, all, {}}};
}

bool replay_improvement(const ImprovementWitness& w, const Allocation& a, const Market& mk) {
  const Shape& s = mk.shape;
  try {
    check_allocation(w.improved, s);
  } catch (const std::logic_error&) {
    return false;
  }
  const Allocation& y = w.improved;
  auto strict = [&](int i) {
    return mk.prefs[i].prefers(bundle_of(y, i, s), bundle_of(a, i, s));
  };
  if (w.kind == "ir") {
    return w.agents.size() == 1 && y == endowment(s) && strict(w.agents[0]);
  }
  if (w.kind == "pareto" || w.kind == "coordinatewise") {
    if (w.kind == "coordinatewise") {
      if (w.types.size() != 1) return false;
      for (int t = 0; t < s.m; ++t)
        if (t != w.types[0])
          for (int i = 0; i < s.n; ++i)
            if (y.owner[i][t] != a.owner[i][t]) return false;
    }
    std::vector<int> gain = pareto_gainers(y, a, mk);
    return !gain.empty() && gain == w.agents;
  }
  if (w.kind == "pairwise" || w.kind == "pairwise-coordinatewise" ||
      w.kind == "tprime-pairwise") {
    if (w.agents.size() != 2) return false;
    std::vector<int> touched = w.types;
    if (w.kind == "pairwise") {
      if (!touched.empty()) return false;
      touched.resize(s.m);
      std::iota(touched.begin(), touched.end(), 0);
    } else if (w.kind == "pairwise-coordinatewise") {
      if (touched.size() != 1) return false;
    } else if (touched.empty() || (int)touched.size() >= s.m) {
      return false;
    }
    int i = w.agents[0], j = w.agents[1];
    for (int k = 0; k < s.n; ++k)
      for (int t = 0; t < s.m; ++t) {
        bool in = std::find(touched.begin(), touched.end(), t) != touched.end();
        int want = a.owner[k][t];
        if (in && k == i) want = a.owner[j][t];
        if (in && k == j) want = a.owner[i][t];
        if (y.owner[k][t] != want) return false;
      }
    return strict(i) && strict(j);
  }
  if (w.kind == "coalitional") {
    if (w.agents.size() < 2) return false;
    Allocation want = a;
    for (size_t l = 0; l < w.agents.size(); ++l)
      want.owner[w.agents[l]] = a.owner[w.agents[(l + 1) % w.agents.size()]];
    if (!(y == want)) return false;
    for (int i : w.agents)
      if (!strict(i)) return false;
    return true;
  }
  if (w.kind == "coalitional-literal") {
    if (!(y == a) || w.agents.size() < 2) return false;
    for (size_t l = 0; l < w.agents.size(); ++l) {
      int cur = w.agents[l], nxt = w.agents[(l + 1) % w.agents.size()];
      if (!mk.prefs[cur].prefers(bundle_of(a, cur, s), bundle_of(a, nxt, s))) return false;
    }
    return true;
  }
  if (w.kind == "unanimity") {
    if (y == a) return false;
    for (int i = 0; i < s.n; ++i)
      if (mk.prefs[i].rank[bundle_of(y, i, s)] != 0) return false;
    return true;
  }
  return false;
}

// Property codes -------------------------------------------------------------

namespace {
struct CodeInfo {
  const char* code;
  const char* name;
  bool pointwise;
};
constexpr CodeInfo kCodes[] = {
    {"ir", "individual rationality", true},
    {"sp", "strategy-proofness", false},
    {"gsp", "group strategy-proofness", false},
    {"nb", "non-bossiness", false},
    {"pe", "Pareto efficiency", true},
    {"ce", "coordinatewise efficiency", true},
    {"pce", "pairwise-coordinatewise efficiency", true},
    {"pe2", "pairwise efficiency", true},
    {"coal", "coalitional efficiency", true},
    {"tpe", "T'-types pairwise efficiency", true},
    {"unan", "unanimity", true},
};

const CodeInfo& code_info(const std::string& code) {
  for (const CodeInfo& c : kCodes)
    if (code == c.code) return c;
  throw std::invalid_argument("unknown property: " + code);
}
}  // namespace

std::vector<std::string> property_codes() {
  std::vector<std::string> out;
  for (const CodeInfo& c : kCodes) out.push_back(c.code);
  return out;
}

const char* property_full_name(const std::string& code) { return code_info(code).name; }

bool is_pointwise_code(const std::string& code) { return code_info(code).pointwise; }

PropertyResult check_pointwise(const std::string& code, const Allocation& a, const Market& mk,
                               const std::vector<Allocation>* pool) {
  if (code == "ir") return is_individually_rational(a, mk);
  if (code == "pe") return is_pareto_efficient(a, mk, {}, pool);
  if (code == "ce") return is_coordinatewise_efficient(a, mk);
  if (code == "pce") return is_pairwise_coordinatewise_efficient(a, mk);
  if (code == "pe2") return is_pairwise_efficient(a, mk);
  if (code == "coal") return is_coalitionally_efficient(a, mk);
  if (code == "tpe") return is_tprime_pairwise_efficient(a, mk);
  if (code == "unan") return unanimity_check(a, mk);
  code_info(code);  // throws on unknown codes
  throw std::invalid_argument("property " + code + " is mechanism-level, not pointwise");
}

// Mechanism-level scans ------------------------------------------------------

static std::vector<long long> strides_of(const EnumeratedDomain& ed) {
  std::vector<long long> st(ed.shape.n);
  long long acc = 1;
  for (int i = ed.shape.n - 1; i >= 0; --i) {
    st[i] = acc;
    acc *= ed.num_prefs();
  }
  return st;
}

static void run_chunks(long long total, int jobs,
                       const std::function<void(int, long long, long long)>& work) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || total < 2048) {
    work(0, 0, total);
    return;
  }
  long long chunk = (total + jobs - 1) / jobs;
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errs(jobs);
  for (int k = 0; k < jobs; ++k)
    threads.emplace_back([&, k] {
      try {
        work(k, std::min(total, k * chunk), std::min(total, (k + 1) * chunk));
      } catch (...) {
        errs[k] = std::current_exception();
      }
    });
  for (std::thread& th : threads) th.join();
  for (std::exception_ptr& e : errs)
    if (e) std::rethrow_exception(e);
}

OutcomeTable tabulate(const Mechanism& f, const EnumeratedDomain& ed, int jobs,
                      const Guards& g) {
  long long total = ed.num_profiles();
  g.require(total <= g.profile_count_cap, "profile space " + std::to_string(total) +
                                              " exceeds cap " +
                                              std::to_string(g.profile_count_cap));
  OutcomeTable t;
  t.alloc_of.assign(total, -1);
  run_chunks(total, jobs, [&](int, long long lo, long long hi) {
    for (long long idx = lo; idx < hi; ++idx)
      t.alloc_of[idx] = (int32_t)allocation_id(f.run(ed.market_at(idx)), ed.shape);
  });
  return t;
}

namespace {
struct ScanCtx {
  std::vector<long long> strides;
  std::vector<std::vector<int>> alloc_bundles;  // [allocation id][agent]
};

ScanCtx make_ctx(const EnumeratedDomain& ed) {
  long long na = num_allocations(ed.shape);
  if (na > 4000000) throw GuardError("guard: allocation table too large for mechanism scans");
  ScanCtx c{strides_of(ed), {}};
  c.alloc_bundles.resize((size_t)na);
  for (long long id = 0; id < na; ++id)
    c.alloc_bundles[id] = bundles_of(allocation_from_id((int)id, ed.shape), ed.shape);
  return c;
}

DeviationWitness unilateral_witness(const char* kind, long long idx, int agent, int r,
                                    const OutcomeTable& t, const EnumeratedDomain& ed,
                                    const ScanCtx& c) {
  DeviationWitness w;
  w.kind = kind;
  w.profile = idx;
  w.coalition = {agent};
  w.misreport = {r};
  std::vector<int> pick = ed.decode_profile(idx);
  long long idx2 = idx + (long long)(r - pick[agent]) * c.strides[agent];
  w.honest = allocation_from_id(t.alloc_of[idx], ed.shape);
  w.deviated = allocation_from_id(t.alloc_of[idx2], ed.shape);
  return w;
}

// Exhaustive unilateral-deviation scan; cond decides whether (honest outcome,
// deviated outcome, deviator, honest pref) is a violation. First violation in
// (profile, agent, misreport) order regardless of jobs.
template <typename Cond>
ScanResult unilateral_scan(const char* kind, const OutcomeTable& t, const EnumeratedDomain& ed,
                           int jobs, Cond cond) {
  ScanCtx c = make_ctx(ed);
  const int n = ed.shape.n, P = (int)ed.num_prefs();
  int lanes = std::max(1, jobs);
  std::vector<std::optional<std::array<long long, 3>>> found(lanes);
  run_chunks(ed.num_profiles(), jobs, [&](int lane, long long lo, long long hi) {
    for (long long idx = lo; idx < hi; ++idx) {
      std::vector<int> pick = ed.decode_profile(idx);
      int32_t o = t.alloc_of[idx];
      for (int i = 0; i < n; ++i) {
        for (int r = 0; r < P; ++r) {
          if (r == pick[i]) continue;
          int32_t o2 = t.alloc_of[idx + (long long)(r - pick[i]) * c.strides[i]];
          if (cond(o, o2, i, ed.prefs[pick[i]], c)) {
            found[lane] = {{idx, i, r}};
            return;
          }
        }
      }
    }
  });
  std::optional<std::array<long long, 3>> best;
  for (const auto& f : found)
    if (f && (!best || *f < *best)) best = f;
  if (!best) return {};
  return {false,
          unilateral_witness(kind, (*best)[0], (int)(*best)[1], (int)(*best)[2], t, ed, c)};
}
}  // namespace

ScanResult scan_strategy_proof(const OutcomeTable& t, const EnumeratedDomain& ed, int jobs) {
  return unilateral_scan("sp", t, ed, jobs,
                         [](int32_t o, int32_t o2, int i, const Pref& p, const ScanCtx& c) {
                           return p.prefers(c.alloc_bundles[o2][i], c.alloc_bundles[o][i]);
                         });
}

ScanResult scan_non_bossy(const OutcomeTable& t, const EnumeratedDomain& ed, int jobs) {
  return unilateral_scan("nb", t, ed, jobs,
                         [](int32_t o, int32_t o2, int i, const Pref&, const ScanCtx& c) {
                           return o != o2 && c.alloc_bundles[o2][i] == c.alloc_bundles[o][i];
                         });
}

ScanResult scan_monotonic(const OutcomeTable& t, const EnumeratedDomain& ed) {
  ScanCtx c = make_ctx(ed);
  const int n = ed.shape.n, P = (int)ed.num_prefs(), B = num_bundles(ed.shape);
  // mt[p][q*B+b]: prefs[q] is a monotonic transformation of prefs[p] at b
  std::vector<std::vector<char>> mt(P, std::vector<char>((size_t)P * B));
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < P; ++q)
      for (int b = 0; b < B; ++b)
        mt[p][(size_t)q * B + b] = is_monotonic_transform(ed.prefs[q], ed.prefs[p], b);
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    std::vector<int> pick = ed.decode_profile(idx);
    int32_t o = t.alloc_of[idx];
    for (int i = 0; i < n; ++i) {
      int mine = c.alloc_bundles[o][i];
      for (int r = 0; r < P; ++r) {
        if (r == pick[i] || !mt[pick[i]][(size_t)r * B + mine]) continue;
        if (t.alloc_of[idx + (long long)(r - pick[i]) * c.strides[i]] != o)
          return {false, unilateral_witness("mono", idx, i, r, t, ed, c)};
      }
    }
  }
  return {};
}

ScanResult scan_group_strategy_proof(const OutcomeTable& t, const EnumeratedDomain& ed,
                                     const Guards& g) {
  const int n = ed.shape.n;
  const long long P = ed.num_prefs();
  long long na = num_allocations(ed.shape);
  g.require(na <= g.alloc_count_cap, "allocation space " + std::to_string(na) +
                                         " exceeds cap " + std::to_string(g.alloc_count_cap));
  ScanCtx c = make_ctx(ed);
  std::vector<int32_t> distinct;
  std::vector<long long> stamp((size_t)na, -1);
  long long stamp_cur = 0;

  std::vector<std::vector<int>> coalitions;
  for (int K = 1; K <= n; ++K) {
    coalitions.clear();
    std::vector<int> comb;
    std::function<void(int)> rec = [&](int start) {
      if ((int)comb.size() == K) {
        coalitions.push_back(comb);
        return;
      }
      for (int v = start; v < n; ++v) {
        comb.push_back(v);
        rec(v + 1);
        comb.pop_back();
      }
    };
    rec(0);
    for (const std::vector<int>& S : coalitions) {
      std::vector<int> rest;
      for (int i = 0; i < n; ++i)
        if (std::find(S.begin(), S.end(), i) == S.end()) rest.push_back(i);
      long long members = 1, classes = 1;
      for (int k = 0; k < K; ++k) members *= P;
      for (int k = 0; k < n - K; ++k) classes *= P;
      // offsets of member/class digit vectors into the profile index
      std::vector<long long> offs_m(members), offs_c(classes);
      std::vector<int> digits((size_t)members * K);
      {
        std::vector<int> d(K, 0);
        for (long long h = 0; h < members; ++h) {
          long long off = 0;
          for (int k = 0; k < K; ++k) {
            off += d[k] * c.strides[S[k]];
            digits[h * K + k] = d[k];
          }
          offs_m[h] = off;
          for (int k = K - 1; k >= 0; --k)
            if (++d[k] < P) break; else d[k] = 0;
        }
        std::vector<int> e(n - K, 0);
        for (long long cls = 0; cls < classes; ++cls) {
          long long off = 0;
          for (int k = 0; k < n - K; ++k) off += e[k] * c.strides[rest[k]];
          offs_c[cls] = off;
          for (int k = n - K - 1; k >= 0; --k)
            if (++e[k] < P) break; else e[k] = 0;
        }
      }
      long long best = -1;
      for (long long cls = 0; cls < classes; ++cls) {
        long long base = offs_c[cls];
        distinct.clear();
        ++stamp_cur;
        for (long long h = 0; h < members; ++h) {
          int32_t o = t.alloc_of[base + offs_m[h]];
          if (stamp[o] != stamp_cur) {
            stamp[o] = stamp_cur;
            distinct.push_back(o);
          }
        }
        if (distinct.size() < 2) continue;
        for (long long h = 0; h < members; ++h) {
          long long global = base + offs_m[h];
          if (best >= 0 && global >= best) continue;
          int32_t oh = t.alloc_of[global];
          for (int32_t o : distinct) {
            if (o == oh) continue;
            bool weak = true, strict = false;
            for (int k = 0; k < K; ++k) {
              const std::vector<int>& rank = ed.prefs[digits[h * K + k]].rank;
              int b2 = c.alloc_bundles[o][S[k]], b1 = c.alloc_bundles[oh][S[k]];
              if (rank[b2] > rank[b1]) {
                weak = false;
                break;
              }
              if (rank[b2] < rank[b1]) strict = true;
            }
            if (weak && strict) {
              best = global;
              break;
            }
          }
        }
      }
      if (best < 0) continue;
      // rebuild the first joint misreport at the earliest violating profile
      std::vector<int> pick = ed.decode_profile(best);
      long long base = best;
      for (int k = 0; k < K; ++k) base -= pick[S[k]] * c.strides[S[k]];
      int32_t oh = t.alloc_of[best];
      for (long long d = 0; d < members; ++d) {
        int32_t o = t.alloc_of[base + offs_m[d]];
        if (o == oh) continue;
        bool weak = true, strict = false;
        for (int k = 0; k < K; ++k) {
          const std::vector<int>& rank = ed.prefs[pick[S[k]]].rank;
          int b2 = c.alloc_bundles[o][S[k]], b1 = c.alloc_bundles[oh][S[k]];
          if (rank[b2] > rank[b1]) {
            weak = false;
            break;
          }
          if (rank[b2] < rank[b1]) strict = true;
        }
        if (!(weak && strict)) continue;
        DeviationWitness w;
        w.kind = "gsp";
        w.profile = best;
        w.coalition = S;
        w.misreport.assign(digits.begin() + d * K, digits.begin() + (d + 1) * K);
        w.honest = allocation_from_id(oh, ed.shape);
        w.deviated = allocation_from_id(o, ed.shape);
        return {false, std::move(w)};
      }
    }
  }
  return {};
}

ScanResult is_strategy_proof(const Mechanism& f, const EnumeratedDomain& ed, int jobs,
                             const Guards& g) {
  return scan_strategy_proof(tabulate(f, ed, jobs, g), ed, jobs);
}
ScanResult is_non_bossy(const Mechanism& f, const EnumeratedDomain& ed, int jobs,
                        const Guards& g) {
  return scan_non_bossy(tabulate(f, ed, jobs, g), ed, jobs);
}
ScanResult is_group_strategy_proof(const Mechanism& f, const EnumeratedDomain& ed, int jobs,
                                   const Guards& g) {
  return scan_group_strategy_proof(tabulate(f, ed, jobs, g), ed, g);
}
ScanResult is_monotonic(const Mechanism& f, const EnumeratedDomain& ed, int jobs,
                        const Guards& g) {
  return scan_monotonic(tabulate(f, ed, jobs, g), ed);
}

std::optional<DeviationWitness> profitable_misreport(const Mechanism& f, const Market& mk,
                                                     const EnumeratedDomain& ed) {
  const Shape& s = mk.shape;
  std::vector<int> pick(s.n);
  for (int i = 0; i < s.n; ++i) {
    auto it = std::find(ed.prefs.begin(), ed.prefs.end(), mk.prefs[i]);
    if (it == ed.prefs.end())
      throw std::invalid_argument("profitable_misreport: market preferences not in the domain");
    pick[i] = (int)(it - ed.prefs.begin());
  }
  Allocation x = f.run(mk);
  for (int i = 0; i < s.n; ++i) {
    int mine = bundle_of(x, i, s);
    for (int r = 0; r < (int)ed.num_prefs(); ++r) {
      if (r == pick[i]) continue;
      Market dev = mk;
      dev.prefs[i] = ed.prefs[r];
      Allocation y = f.run(dev);
      if (mk.prefs[i].prefers(bundle_of(y, i, s), mine)) {
        DeviationWitness w;
        w.kind = "sp";
        w.profile = ed.encode_profile(pick);
        w.coalition = {i};
        w.misreport = {r};
        w.honest = x;
        w.deviated = y;
        return w;
      }
    }
  }
  return std::nullopt;
}

bool replay_deviation(const DeviationWitness& w, const Mechanism& f, const EnumeratedDomain& ed) {
  const Shape& s = ed.shape;
  if (w.coalition.empty() || w.coalition.size() != w.misreport.size()) return false;
  if (w.profile < 0 || w.profile >= ed.num_profiles()) return false;
  Market honest = ed.market_at(w.profile);
  Market dev = honest;
  std::vector<int> pick = ed.decode_profile(w.profile);
  bool changed = false;
  for (size_t k = 0; k < w.coalition.size(); ++k) {
    dev.prefs[w.coalition[k]] = ed.prefs[w.misreport[k]];
    changed = changed || w.misreport[k] != pick[w.coalition[k]];
  }
  if (!changed) return false;
  Allocation x = f.run(honest), y = f.run(dev);
  if (!(x == w.honest) || !(y == w.deviated)) return false;
  if (w.kind == "sp") {
    if (w.coalition.size() != 1) return false;
    int i = w.coalition[0];
    return honest.prefs[i].prefers(bundle_of(y, i, s), bundle_of(x, i, s));
  }
  if (w.kind == "nb") {
    if (w.coalition.size() != 1) return false;
    int i = w.coalition[0];
    return bundle_of(y, i, s) == bundle_of(x, i, s) && !(y == x);
  }
  if (w.kind == "gsp") {
    bool strict = false;
    for (int i : w.coalition) {
      if (honest.prefs[i].prefers(bundle_of(x, i, s), bundle_of(y, i, s))) return false;
      strict = strict || honest.prefs[i].prefers(bundle_of(y, i, s), bundle_of(x, i, s));
    }
    return strict;
  }
  if (w.kind == "mono") {
    if (w.coalition.size() != 1) return false;
    int i = w.coalition[0];
    return is_monotonic_transform(dev.prefs[i], honest.prefs[i], bundle_of(x, i, s)) &&
           !(y == x);
  }
  if (w.kind == "fact2") {
    if (w.coalition.size() != 1) return false;
    int i = w.coalition[0];
    const Pref &hp = honest.prefs[i], &dp = dev.prefs[i];
    if (hp.kind != PrefKind::lexicographic || hp.importance != dp.importance) return false;
    for (size_t t = 1; t < hp.importance.size(); ++t)
      if (hp.marg_order[hp.importance[t]] != dp.marg_order[hp.importance[t]]) return false;
    int t0 = hp.importance[0];
    return y.owner[i][t0] == x.owner[i][t0] && !(y == x);
  }
  return false;
}

LemmaReport lemma_checks(const Mechanism& f, const EnumeratedDomain& ed, const Guards& g) {
  OutcomeTable t = tabulate(f, ed, 1, g);
  LemmaReport rep;
  ScanResult sp = scan_strategy_proof(t, ed);
  ScanResult nb = scan_non_bossy(t, ed);
  ScanResult mono = scan_monotonic(t, ed);
  rep.sp = sp.ok;
  rep.nb = nb.ok;
  rep.monotonic = mono.ok;
  if (!sp.ok || !nb.ok) {
    rep.lemma1 = "not applicable (mechanism is not strategy-proof and non-bossy)";
  } else if (mono.ok) {
    rep.lemma1 = "holds";
  } else {
    rep.lemma1 = "VIOLATED";
    rep.counterexample = mono.witness;
  }

  bool lex = std::all_of(ed.prefs.begin(), ed.prefs.end(),
                         [](const Pref& p) { return p.kind == PrefKind::lexicographic; });
  if (!lex) {
    rep.fact2 = "not applicable (needs lexicographic preferences)";
    return rep;
  }
  ScanCtx c = make_ctx(ed);
  const int n = ed.shape.n, P = (int)ed.num_prefs();
  // pairs differing at most in the marginal of the most important type
  std::vector<std::vector<int>> adm(P);
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < P; ++q) {
      if (q == p || ed.prefs[p].importance != ed.prefs[q].importance) continue;
      bool same_tail = true;
      for (size_t k = 1; k < ed.prefs[p].importance.size() && same_tail; ++k) {
        int tt = ed.prefs[p].importance[k];
        same_tail = ed.prefs[p].marg_order[tt] == ed.prefs[q].marg_order[tt];
      }
      if (same_tail) adm[p].push_back(q);
    }
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    std::vector<int> pick = ed.decode_profile(idx);
    int32_t o = t.alloc_of[idx];
    Allocation x = allocation_from_id(o, ed.shape);
    for (int i = 0; i < n; ++i) {
      int t0 = ed.prefs[pick[i]].importance[0];
      for (int r : adm[pick[i]]) {
        long long idx2 = idx + (long long)(r - pick[i]) * c.strides[i];
        if (t.alloc_of[idx2] == o) continue;
        Allocation y = allocation_from_id(t.alloc_of[idx2], ed.shape);
        if (y.owner[i][t0] == x.owner[i][t0]) {
          rep.fact2 = rep.sp && rep.nb ? "VIOLATED"
                                       : "fails (not implied without strategy-proofness and "
                                         "non-bossiness)";
          if (!rep.counterexample)
            rep.counterexample = unilateral_witness("fact2", idx, i, r, t, ed, c);
          return rep;
        }
      }
    }
  }
  rep.fact2 = "holds";
  return rep;
}

}  // namespace mtm
