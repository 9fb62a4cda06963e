#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <numeric>
#include <random>

#include "mtm/mechanisms.h"
#include "testutil.h"

using namespace mtm;

static std::vector<int> shuffled(int n, std::mt19937& rng) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = (int)(rng() % (unsigned)(i + 1));
    std::swap(v[i], v[j]);
  }
  return v;
}

static Pref random_lex(const Shape& s, std::mt19937& rng) {
  std::vector<std::vector<int>> mo;
  for (int t = 0; t < s.m; ++t) mo.push_back(shuffled(s.n, rng));
  return lexicographic_from(mo, shuffled(s.m, rng), s);
}

TEST_CASE("single-type ttc golden runs") {
  // worked 3-agent house market: step 1 executes 2<->3, step 2 leaves 1 alone
  Trace tr;
  std::vector<int> got = ttc_single_type({{1, 2, 0}, {2, 1, 0}, {1, 0, 2}}, &tr, 0);
  CHECK(got == std::vector<int>{0, 2, 1});
  REQUIRE(tr.steps.size() == 2);
  REQUIRE(tr.steps[0].size() == 1);
  CHECK(render_cycle(tr.steps[0][0], {"H"}) == "2→H3→3→H2→2");
  CHECK(render_cycle(tr.steps[1][0], {"H"}) == "1→H1→1");

  // both agents top H2: the owner keeps it
  CHECK(ttc_single_type({{1, 0}, {1, 0}}) == std::vector<int>{0, 1});

  // unanimous self-cycles
  CHECK(ttc_single_type({{0, 1, 2}, {1, 0, 2}, {2, 1, 0}}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("ttc outcome does not depend on cycle execution order") {
  // all 6^3 marginal profiles at n=3
  std::vector<std::vector<int>> perms;
  std::vector<int> base{0, 1, 2};
  do perms.push_back(base);
  while (std::next_permutation(base.begin(), base.end()));
  for (const auto& a : perms)
    for (const auto& b : perms)
      for (const auto& c : perms)
        CHECK(ttc_single_type({a, b, c}) == ttc_single_type({a, b, c}, nullptr, 0, true));

  std::mt19937 rng(7);
  for (int it = 0; it < 200; ++it) {
    std::vector<std::vector<int>> mo;
    for (int i = 0; i < 6; ++i) mo.push_back(shuffled(6, rng));
    CHECK(ttc_single_type(mo) == ttc_single_type(mo, nullptr, 0, true));
  }
}

TEST_CASE("cttc worked examples") {
  CHECK(cttc(tu::ex1()) == endowment({2, 2}));
  CHECK(cttc(tu::ex1_bar()) == tu::alloc({{1, 1}, {0, 0}}));
  CHECK(cttc(tu::ex1_hat()) == tu::alloc({{0, 1}, {1, 0}}));
}

TEST_CASE("cttc accepts separable strict rankings and rejects the rest") {
  Shape s{2, 2};
  Market strict_sep = tu::ex1();
  strict_sep.domain = Domain::strict;
  for (Pref& p : strict_sep.prefs) p = pref_from_order(p.order, s);
  CHECK(cttc(strict_sep) == endowment(s));

  // (H1,C1) > (H2,C2) > (H2,C1) > (H1,C2) is not separable
  Market bad = tu::market(s, Domain::strict,
                          {pref_from_order({0, 3, 2, 1}, s), pref_from_order({0, 1, 2, 3}, s)});
  CHECK_THROWS_AS(cttc(bad), std::runtime_error);
}

TEST_CASE("bttc worked examples") {
  CHECK(bttc(tu::ex1()) == tu::alloc({{1, 1}, {0, 0}}));
  CHECK(bttc(tu::ex1_hat()) == endowment({2, 2}));
  CHECK(bttc(tu::ex3()) == tu::alloc({{1, 1}, {0, 0}, {2, 2}}));

  Trace tr;
  bttc(tu::ex3(), &tr);
  REQUIRE(tr.steps.size() == 2);
  REQUIRE(tr.steps[0].size() == 1);
  REQUIRE(tr.steps[1].size() == 1);
  CHECK(render_cycle(tr.steps[0][0], {"H", "C"}) == "1→H2→2→C1→1");
  CHECK(render_cycle(tr.steps[1][0], {"H", "C"}) == "3→H3→3");
}

TEST_CASE("bttc on the three-type proof profiles") {
  Shape s{2, 3};
  CHECK(bttc(tu::a5()) == tu::alloc({{1, 1, 1}, {0, 0, 0}}));
  CHECK(bttc(tu::a5_dev1()) == endowment(s));
  CHECK(bttc(tu::a5_dev2()) == tu::alloc({{1, 1, 1}, {0, 0, 0}}));
}

TEST_CASE("bttc works from plain strict rankings via the endowment restriction") {
  Shape s{2, 2};
  Market strict_ex1 = tu::ex1();
  strict_ex1.domain = Domain::strict;
  for (Pref& p : strict_ex1.prefs) p = pref_from_order(p.order, s);
  Trace tr;
  CHECK(bttc(strict_ex1, &tr) == tu::alloc({{1, 1}, {0, 0}}));
  REQUIRE(tr.steps.size() == 1);
  CHECK(render_cycle(tr.steps[0][0], {"H", "C"}) == "1→e2→2→e1→1");
}

TEST_CASE("bttc: step-wise and endowment-restriction constructions agree") {
  // exhaustive at (2,2), (2,3), (3,2); sampled at (3,3) — bttc() itself
  // throws if the two outcomes differ, so running it is the assertion
  for (auto [shape, count] : std::vector<std::pair<Shape, long long>>{
           {{2, 2}, 64}, {{2, 3}, 2304}, {{3, 2}, 373248}}) {
    EnumeratedDomain ed = enumerate_domain(shape, Domain::lexicographic);
    REQUIRE(ed.num_profiles() == count);
    for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
      Allocation x = bttc(ed.market_at(idx));
      check_allocation(x, shape);
    }
  }

  Shape s33{3, 3};
  std::mt19937 rng(33);
  long long samples = std::getenv("MTM_FULL_SWEEP") ? -1 : 300000;
  if (samples < 0) {
    EnumeratedDomain ed = enumerate_domain(s33, Domain::lexicographic, []{
      Guards g;
      g.profile_count_cap = 3000000000LL;
      return g;
    }());
    for (long long idx = 0; idx < ed.num_profiles(); ++idx) bttc(ed.market_at(idx));
  } else {
    for (long long it = 0; it < samples; ++it) {
      Market mk;
      mk.shape = s33;
      mk.domain = Domain::lexicographic;
      mk.type_names = default_type_names(3);
      for (int i = 0; i < 3; ++i) mk.prefs.push_back(random_lex(s33, rng));
      check_allocation(bttc(mk), s33);
    }
  }
}

TEST_CASE("bttc only depends on the endowment restrictions") {
  Shape s{2, 2};
  EnumeratedDomain ed = enumerate_domain(s, Domain::lexicographic);
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    Market mk = ed.market_at(idx);
    Allocation x = bttc(mk);
    for (int i = 0; i < s.n; ++i) {
      std::vector<int> r = restrict_to_endowments(mk.prefs[i], s);
      for (const Pref& alt : ed.prefs) {
        if (restrict_to_endowments(alt, s) != r) continue;
        Market mod = mk;
        mod.prefs[i] = alt;
        CHECK(bttc(mod) == x);
      }
    }
  }
}

TEST_CASE("m=1 collapse: bttc and cttc reduce to plain ttc") {
  std::mt19937 rng(1);
  for (int it = 0; it < 50; ++it) {
    int n = 2 + (int)(rng() % 5u);
    Shape s{n, 1};
    Market mk;
    mk.shape = s;
    mk.domain = Domain::strict;
    mk.type_names = default_type_names(1);
    std::vector<std::vector<int>> mo;
    for (int i = 0; i < n; ++i) {
      mo.push_back(shuffled(n, rng));
      mk.prefs.push_back(pref_from_order(mo.back(), s));
    }
    std::vector<int> ttc = ttc_single_type(mo);
    Allocation want;
    want.owner.assign(n, std::vector<int>(1));
    for (int i = 0; i < n; ++i) want.owner[i][0] = ttc[i];
    CHECK(bttc(mk) == want);
    CHECK(cttc(mk) == want);
  }
}

TEST_CASE("serial dictatorship") {
  CHECK(serial_dictatorship(tu::ex1_bar()) == tu::alloc({{1, 1}, {0, 0}}));
  CHECK(serial_dictatorship(tu::ex1(), {1, 0}) == tu::alloc({{0, 1}, {1, 0}}));

  // unanimous self-preference: endowment under every order
  Shape s{2, 2};
  Market selfish = tu::market(s, Domain::lexicographic,
                              {tu::lexpref(s, {{0, 1}, {0, 1}}, {0, 1}),
                               tu::lexpref(s, {{1, 0}, {1, 0}}, {0, 1})});
  CHECK(serial_dictatorship(selfish) == endowment(s));
  CHECK(serial_dictatorship(selfish, {1, 0}) == endowment(s));

  CHECK_THROWS_AS(serial_dictatorship(tu::ex1(), {0, 0}), std::invalid_argument);
}

TEST_CASE("multiple serial ir worked examples") {
  CHECK(multiple_serial_ir(tu::ex4()) == tu::alloc({{1, 1}, {0, 0}}));
  CHECK(multiple_serial_ir(tu::ex4_dev()) == tu::alloc({{1, 0}, {0, 1}}));

  // endowment is the only individually rational allocation
  Shape s{2, 2};
  Market selfish = tu::market(s, Domain::lexicographic,
                              {tu::lexpref(s, {{0, 1}, {0, 1}}, {0, 1}),
                               tu::lexpref(s, {{1, 0}, {1, 0}}, {0, 1})});
  CHECK(multiple_serial_ir(selfish) == endowment(s));
  CHECK(multiple_serial_ir(selfish, {1, 0}) == endowment(s));
}

TEST_CASE("bossy hybrid case split") {
  Shape s{3, 2};
  // agent 1 self-tops: outside the special set, bTTC applies
  Market plain = tu::ex3();
  CHECK(bossy_hybrid(plain) == bttc(plain));

  // agent 1 tops agent 2's endowment; y gives everyone at least bTTC
  Market dom = tu::market(s, Domain::lexicographic,
                          {tu::lexpref(s, {{1, 0, 2}, {1, 0, 2}}, {0, 1}),
                           tu::lexpref(s, {{0, 1, 2}, {2, 1, 0}}, {0, 1}),
                           tu::lexpref(s, {{2, 0, 1}, {0, 2, 1}}, {0, 1})});
  CHECK(bttc(dom) == tu::alloc({{1, 1}, {0, 0}, {2, 2}}));
  CHECK(bossy_hybrid(dom) == tu::alloc({{1, 1}, {0, 2}, {2, 0}}));

  // agent 3 prefers own car: y no longer dominates, back to bTTC
  Market veto = dom;
  veto.prefs[2] = tu::lexpref(s, {{2, 0, 1}, {2, 0, 1}}, {0, 1});
  CHECK(bossy_hybrid(veto) == bttc(veto));

  CHECK_THROWS_AS(bossy_hybrid(tu::ex1()), std::invalid_argument);
}

TEST_CASE("y-restricted unanimity") {
  Shape s{2, 2};
  Allocation x = tu::alloc({{1, 1}, {0, 0}});
  CHECK(y_restricted_unanimity(tu::ex1(), x) == x);  // both prefer x to e
  CHECK(y_restricted_unanimity(tu::ex1(), tu::alloc({{0, 1}, {1, 0}})) == endowment(s));
  CHECK(y_restricted_unanimity(tu::ex1(), endowment(s)) == endowment(s));
}

TEST_CASE("house-then-penalized-car") {
  Shape s{2, 2};
  auto mk = [&](std::vector<int> car1, std::vector<int> car2) {
    return tu::market(s, Domain::lex_common,
                      {tu::lexpref(s, {{1, 0}, car1}, {0, 1}),
                       tu::lexpref(s, {{0, 1}, car2}, {0, 1})},
                      {"H", "C"});
  };
  // houses trade; agent 1's own car sinks, but agent 2 keeps his car anyway
  CHECK(house_then_penalized_car(mk({0, 1}, {1, 0})) == tu::alloc({{1, 0}, {0, 1}}));
  // agent 2 points at car 1, so the penalty makes the cars trade...
  CHECK(house_then_penalized_car(mk({0, 1}, {0, 1})) == tu::alloc({{1, 1}, {0, 0}}));
  // ...while cttc leaves them put (agent 1's true top is his own car)
  CHECK(cttc(mk({0, 1}, {0, 1})) == tu::alloc({{1, 0}, {0, 1}}));

  // no house trade for agent 1: collapses to cttc
  Market keep = tu::market(s, Domain::lex_common,
                           {tu::lexpref(s, {{0, 1}, {1, 0}}, {0, 1}),
                            tu::lexpref(s, {{1, 0}, {0, 1}}, {0, 1})},
                           {"H", "C"});
  CHECK(house_then_penalized_car(keep) == cttc(keep));

  CHECK_THROWS_AS(house_then_penalized_car(tu::a5()), std::invalid_argument);
}

TEST_CASE("type relabeling permutes cttc columns") {
  for (Market mk : {tu::ex1(), tu::ex1_bar(), tu::ex1_hat(), tu::ex3()}) {
    Market sw = mk;
    sw.type_names = {mk.type_names[1], mk.type_names[0]};
    for (size_t i = 0; i < mk.prefs.size(); ++i) {
      const Pref& p = mk.prefs[i];
      std::vector<int> pi;
      for (int t : p.importance) pi.push_back(1 - t);
      sw.prefs[i] = lexicographic_from({p.marg_order[1], p.marg_order[0]}, pi, mk.shape);
    }
    Allocation a = cttc(mk), b = cttc(sw);
    for (int i = 0; i < mk.shape.n; ++i) {
      CHECK(b.owner[i][0] == a.owner[i][1]);
      CHECK(b.owner[i][1] == a.owner[i][0]);
    }
    // bttc trades whole endowments, so columns are tied together anyway
    CHECK(bttc(sw) == bttc(mk));
  }
}

TEST_CASE("cttc output is per-type efficient for the marginals") {
  Shape s{2, 2};
  EnumeratedDomain ed = enumerate_domain(s, Domain::separable);
  std::vector<std::vector<int>> perms{{0, 1}, {1, 0}};
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    Market mk = ed.market_at(idx);
    Allocation x = cttc(mk);
    for (int t = 0; t < s.m; ++t)
      for (const std::vector<int>& q : perms) {
        bool weak = true, strict = false;
        for (int i = 0; i < s.n; ++i) {
          int cur = x.owner[i][t], alt = q[x.owner[i][t]];
          weak = weak && mk.prefs[i].marg_rank[t][alt] <= mk.prefs[i].marg_rank[t][cur];
          strict = strict || mk.prefs[i].marg_rank[t][alt] < mk.prefs[i].marg_rank[t][cur];
        }
        CHECK_FALSE((weak && strict));
      }
  }
}

TEST_CASE("every mechanism yields feasible allocations across a whole domain") {
  Shape s{2, 2};
  EnumeratedDomain ed = enumerate_domain(s, Domain::lexicographic);
  Allocation x = tu::alloc({{1, 1}, {0, 0}});
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    Market mk = ed.market_at(idx);
    for (const Allocation& a :
         {bttc(mk), cttc(mk), no_trade(mk), serial_dictatorship(mk), multiple_serial_ir(mk),
          y_restricted_unanimity(mk, x)})
      check_allocation(a, s);
  }
  EnumeratedDomain common = enumerate_domain(s, Domain::lex_common);
  for (long long idx = 0; idx < common.num_profiles(); ++idx)
    check_allocation(house_then_penalized_car(common.market_at(idx)), s);
}

TEST_CASE("mechanism registry") {
  CHECK(mechanism_names().size() == 8);
  CHECK(make_mechanism("bttc").run(tu::ex1()) == tu::alloc({{1, 1}, {0, 0}}));
  MechanismOptions opts;
  opts.order = {1, 0};
  CHECK(make_mechanism("serial_dictatorship", opts).run(tu::ex1()) ==
        tu::alloc({{0, 1}, {1, 0}}));
  opts.target = tu::alloc({{1, 1}, {0, 0}});
  CHECK(make_mechanism("y_restricted_unanimity", opts).run(tu::ex1()) == *opts.target);
  CHECK_THROWS_AS(make_mechanism("ttc_for_rent"), std::invalid_argument);
  CHECK_THROWS_AS(make_mechanism("y_restricted_unanimity"), std::invalid_argument);
}
