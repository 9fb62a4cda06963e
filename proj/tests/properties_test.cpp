#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "mtm/properties.h"
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

// brute-force oracle: u is unanimously best iff it beats every allocation for
// every agent
static bool unan_brute(const Allocation& a, const Market& mk) {
  std::vector<Allocation> all = enumerate_allocations(mk.shape);
  for (const Allocation& u : all) {
    bool best = true;
    for (const Allocation& x : all)
      for (int i = 0; i < mk.shape.n && best; ++i)
        best = mk.prefs[i].weakly_prefers(bundle_of(u, i, mk.shape), bundle_of(x, i, mk.shape));
    if (best) return u == a;
  }
  return true;
}

static void chain_and_replay(const EnumeratedDomain& ed, bool unan_link) {
  std::vector<Allocation> allocs = enumerate_allocations(ed.shape);
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    Market mk = ed.market_at(idx);
    for (const Allocation& a : allocs) {
      PropertyResult pe = is_pareto_efficient(a, mk, {}, &allocs);
      PropertyResult ce = is_coordinatewise_efficient(a, mk);
      PropertyResult pce = is_pairwise_coordinatewise_efficient(a, mk);
      PropertyResult pe2 = is_pairwise_efficient(a, mk);
      PropertyResult coal = is_coalitionally_efficient(a, mk);
      PropertyResult tpe = is_tprime_pairwise_efficient(a, mk);
      PropertyResult unan = unanimity_check(a, mk);
      PropertyResult ir = is_individually_rational(a, mk);
      CHECK((!pe.ok || ce.ok));
      CHECK((!ce.ok || pce.ok));
      CHECK((!pe.ok || coal.ok));
      CHECK((!coal.ok || pe2.ok));
      if (unan_link) CHECK((!pce.ok || unan.ok));
      CHECK(pce.ok == tpe.ok);   // two types: the strict subsets are singletons
      CHECK(coal.ok == pe2.ok);  // two agents: the only rotations are swaps
      CHECK(unan.ok == unan_brute(a, mk));
      for (const PropertyResult* r : {&pe, &ce, &pce, &pe2, &coal, &tpe, &unan, &ir})
        if (!r->ok) {
          REQUIRE(r->witness.has_value());
          CHECK(replay_improvement(*r->witness, a, mk));
        }
    }
  }
}

TEST_CASE("efficiency implication chain, exhaustively on strict (2,2)") {
  chain_and_replay(enumerate_domain({2, 2}, Domain::strict), false);
}

TEST_CASE("full chain with the unanimity link on separable (2,2)") {
  chain_and_replay(enumerate_domain({2, 2}, Domain::separable), true);
}

TEST_CASE("pairwise-coordinatewise efficiency does not force unanimity on strict profiles") {
  // e survives every single-type swap here, yet both agents agree the full
  // trade is best — so the unanimity link genuinely needs separability
  Shape s{2, 2};
  Market mk = tu::market(s, Domain::strict,
                         {pref_from_order({3, 0, 2, 1}, s), pref_from_order({0, 3, 1, 2}, s)});
  Allocation e = endowment(s);
  CHECK(is_coordinatewise_efficient(e, mk).ok);
  CHECK(is_pairwise_coordinatewise_efficient(e, mk).ok);
  PropertyResult u = unanimity_check(e, mk);
  REQUIRE_FALSE(u.ok);
  CHECK(u.witness->improved == tu::alloc({{1, 1}, {0, 0}}));
  CHECK_FALSE(is_pairwise_efficient(e, mk).ok);
  CHECK_FALSE(is_pareto_efficient(e, mk).ok);
}

TEST_CASE("worked-example verdicts") {
  Shape s{2, 2};
  Allocation e = endowment(s);
  Allocation x = tu::alloc({{1, 1}, {0, 0}});

  CHECK(is_individually_rational(x, tu::ex1()).ok);
  CHECK(is_pairwise_efficient(x, tu::ex1()).ok);
  CHECK(is_coordinatewise_efficient(x, tu::ex1()).ok);

  PropertyResult swap = is_pairwise_efficient(e, tu::ex1());
  REQUIRE_FALSE(swap.ok);
  CHECK(swap.witness->improved == x);
  CHECK(swap.witness->agents == std::vector<int>{0, 1});

  // at the hat profile the cars can still trade, pairwise within one type
  PropertyResult cars = is_pairwise_coordinatewise_efficient(e, tu::ex1_hat());
  REQUIRE_FALSE(cars.ok);
  CHECK(cars.witness->types == std::vector<int>{1});
  CHECK(cars.witness->agents == std::vector<int>{0, 1});
  CHECK_FALSE(is_coordinatewise_efficient(e, tu::ex1_hat()).ok);
  CHECK(is_coordinatewise_efficient(x, tu::ex1()).ok);

  // unanimously best allocation equal to the outcome
  CHECK(is_pareto_efficient(x, tu::ex1_bar()).ok);
  CHECK(unanimity_check(x, tu::ex1_bar()).ok);

  // a dictator grabbing the shared top leaves agent 2 below his endowment
  Market greedy = tu::market(s, Domain::lexicographic,
                             {tu::lexpref(s, {{1, 0}, {1, 0}}, {0, 1}),
                              tu::lexpref(s, {{1, 0}, {1, 0}}, {0, 1})});
  PropertyResult ir = is_individually_rational(serial_dictatorship(greedy), greedy);
  REQUIRE_FALSE(ir.ok);
  CHECK(ir.witness->agents == std::vector<int>{1});
  CHECK(replay_improvement(*ir.witness, serial_dictatorship(greedy), greedy));

  // serial dictatorship output is always Pareto efficient
  EnumeratedDomain ed = enumerate_domain(s, Domain::strict);
  std::vector<Allocation> pool = enumerate_allocations(s);
  for (long long idx = 0; idx < ed.num_profiles(); ++idx) {
    Market mk = ed.market_at(idx);
    CHECK(is_pareto_efficient(serial_dictatorship(mk), mk, {}, &pool).ok);
    CHECK(is_pareto_efficient(serial_dictatorship(mk, {1, 0}), mk, {}, &pool).ok);
  }
}

TEST_CASE("three-type swaps: which allocations survive partial-trade scrutiny") {
  Market a5 = tu::a5();
  // trading only types 1 and 2 is fine; staying put is not
  CHECK(is_tprime_pairwise_efficient(tu::alloc({{1, 1, 0}, {0, 0, 1}}), a5).ok);
  PropertyResult r = is_tprime_pairwise_efficient(endowment({2, 3}), a5);
  REQUIRE_FALSE(r.ok);
  CHECK(replay_improvement(*r.witness, endowment({2, 3}), a5));
}

TEST_CASE("coalitional efficiency: rotations and the literal reading") {
  Shape s{3, 2};
  // each agent tops the next agent's full endowment
  Market ring = tu::market(s, Domain::lexicographic,
                           {tu::lexpref(s, {{1, 0, 2}, {1, 0, 2}}, {0, 1}),
                            tu::lexpref(s, {{2, 1, 0}, {2, 1, 0}}, {0, 1}),
                            tu::lexpref(s, {{0, 2, 1}, {0, 2, 1}}, {0, 1})});
  Allocation e = endowment(s);
  PropertyResult improving = is_coalitionally_efficient(e, ring);
  REQUIRE_FALSE(improving.ok);
  CHECK(improving.witness->agents == std::vector<int>{0, 1, 2});
  CHECK(replay_improvement(*improving.witness, e, ring));
  // the literal chain runs the same cycle backwards: everyone prefers their
  // endowment to the previous member's
  PropertyResult backwards = is_coalitionally_efficient(e, ring, true);
  REQUIRE_FALSE(backwards.ok);
  CHECK(backwards.witness->agents == std::vector<int>{0, 2, 1});
  CHECK(replay_improvement(*backwards.witness, e, ring));

  // with two agents the readings pull apart: a mutually beneficial swap is an
  // improvement but never a literal chain
  CHECK_FALSE(is_coalitionally_efficient(endowment({2, 2}), tu::ex1_bar()).ok);
  CHECK(is_coalitionally_efficient(endowment({2, 2}), tu::ex1_bar(), true).ok);

  // bttc output is coalitionally efficient on the worked examples
  for (const Market& mk : {tu::ex1(), tu::ex1_hat(), tu::ex3()})
    CHECK(is_coalitionally_efficient(bttc(mk), mk).ok);

  // a profile where the literal reading fires while no improvement exists:
  // two selfish agents each prefer their own endowment to the other's
  Shape s2{2, 2};
  Market selfish = tu::market(s2, Domain::lexicographic,
                              {tu::lexpref(s2, {{0, 1}, {0, 1}}, {0, 1}),
                               tu::lexpref(s2, {{1, 0}, {1, 0}}, {0, 1})});
  CHECK(is_coalitionally_efficient(endowment(s2), selfish).ok);
  PropertyResult literal = is_coalitionally_efficient(endowment(s2), selfish, true);
  REQUIRE_FALSE(literal.ok);
  CHECK(replay_improvement(*literal.witness, endowment(s2), selfish));
}

TEST_CASE("m=1 collapse of the efficiency notions") {
  std::mt19937 rng(11);
  for (int it = 0; it < 50; ++it) {
    int n = 2 + (int)(rng() % 5u);
    Shape s{n, 1};
    Market mk;
    mk.shape = s;
    mk.domain = Domain::strict;
    mk.type_names = default_type_names(1);
    for (int i = 0; i < n; ++i) mk.prefs.push_back(pref_from_order(shuffled(n, rng), s));
    for (int k = 0; k < 20; ++k) {
      Allocation a = allocation_from_id((int)(rng() % (unsigned)factorial(n)), s);
      PropertyResult pe = is_pareto_efficient(a, mk);
      PropertyResult ce = is_coordinatewise_efficient(a, mk);
      PropertyResult coal = is_coalitionally_efficient(a, mk);
      CHECK(pe.ok == ce.ok);
      if (!pe.ok) CHECK(pe.witness->improved == ce.witness->improved);
      CHECK(pe.ok == coal.ok);
      // pairwise efficiency is the object-swap condition of one-type markets
      bool swap_free = true;
      for (int i = 0; i < n && swap_free; ++i)
        for (int j = i + 1; j < n && swap_free; ++j)
          swap_free = !(mk.prefs[i].prefers(a.owner[j][0], a.owner[i][0]) &&
                        mk.prefs[j].prefers(a.owner[i][0], a.owner[j][0]));
      CHECK(is_pairwise_efficient(a, mk).ok == swap_free);
      CHECK(is_tprime_pairwise_efficient(a, mk).ok);  // no strict type subsets
    }
  }
}

TEST_CASE("incentive scans on the benchmark mechanisms") {
  EnumeratedDomain lex = enumerate_domain({2, 2}, Domain::lexicographic);
  EnumeratedDomain sep = enumerate_domain({2, 2}, Domain::separable);

  OutcomeTable nt = tabulate(make_mechanism("no_trade"), lex);
  CHECK(scan_strategy_proof(nt, lex).ok);
  CHECK(scan_non_bossy(nt, lex).ok);
  CHECK(scan_group_strategy_proof(nt, lex).ok);

  Mechanism ct = make_mechanism("cttc");
  OutcomeTable ctt = tabulate(ct, sep);
  CHECK(scan_strategy_proof(ctt, sep).ok);
  CHECK(scan_non_bossy(ctt, sep).ok);
  ScanResult gsp = scan_group_strategy_proof(ctt, sep);
  REQUIRE_FALSE(gsp.ok);
  CHECK(replay_deviation(*gsp.witness, ct, sep));

  // the worked misreport: both agents pretending to crave each other's whole
  // endowment turns cttc's no-trade into the full trade
  auto by_order = [&](const Pref& p) {
    for (size_t k = 0; k < sep.prefs.size(); ++k)
      if (sep.prefs[k].order == p.order) return (int)k;
    return -1;
  };
  std::vector<int> honest(2), fake(2);
  for (int i = 0; i < 2; ++i) {
    honest[i] = by_order(tu::ex1().prefs[i]);
    fake[i] = by_order(tu::ex1_bar().prefs[i]);
    REQUIRE(honest[i] >= 0);
    REQUIRE(fake[i] >= 0);
  }
  DeviationWitness w;
  w.kind = "gsp";
  w.profile = sep.encode_profile(honest);
  w.coalition = {0, 1};
  w.misreport = fake;
  w.honest = endowment({2, 2});
  w.deviated = tu::alloc({{1, 1}, {0, 0}});
  CHECK(replay_deviation(w, ct, sep));

  Mechanism ms = make_mechanism("multiple_serial_ir");
  OutcomeTable mst = tabulate(ms, lex);
  ScanResult msp = scan_strategy_proof(mst, lex);
  REQUIRE_FALSE(msp.ok);
  CHECK(replay_deviation(*msp.witness, ms, lex));
  CHECK(scan_non_bossy(mst, lex).ok);
  CHECK_FALSE(scan_group_strategy_proof(mst, lex).ok);
}

TEST_CASE("the misreport at the fourth worked example is forced") {
  EnumeratedDomain lex = enumerate_domain({2, 2}, Domain::lexicographic);
  Mechanism ms = make_mechanism("multiple_serial_ir");
  std::optional<DeviationWitness> w = profitable_misreport(ms, tu::ex4(), lex);
  REQUIRE(w.has_value());
  CHECK(w->coalition == std::vector<int>{1});
  CHECK(lex.prefs[w->misreport[0]] == tu::ex4_dev().prefs[1]);
  CHECK(w->deviated == tu::alloc({{1, 0}, {0, 1}}));
  CHECK(replay_deviation(*w, ms, lex));

  // agent 2 has exactly one profitable lie at this market
  int count = 0;
  for (const Pref& alt : lex.prefs) {
    if (alt == tu::ex4().prefs[1]) continue;
    Market dev = tu::ex4();
    dev.prefs[1] = alt;
    Allocation y = multiple_serial_ir(dev);
    if (tu::ex4().prefs[1].prefers(bundle_of(y, 1, {2, 2}),
                                   bundle_of(multiple_serial_ir(tu::ex4()), 1, {2, 2})))
      ++count;
  }
  CHECK(count == 1);
}

TEST_CASE("group strategy-proofness against sp+nb, mechanism by mechanism") {
  EnumeratedDomain strict = enumerate_domain({2, 2}, Domain::strict);
  std::vector<Mechanism> mechs;
  mechs.push_back(make_mechanism("bttc"));
  mechs.push_back(make_mechanism("no_trade"));
  mechs.push_back(make_mechanism("serial_dictatorship"));
  MechanismOptions rev;
  rev.order = {1, 0};
  mechs.push_back(make_mechanism("serial_dictatorship", rev));
  mechs.push_back(make_mechanism("multiple_serial_ir"));
  MechanismOptions tx;
  tx.target = tu::alloc({{1, 1}, {0, 0}});
  mechs.push_back(make_mechanism("y_restricted_unanimity", tx));
  for (const Mechanism& f : mechs) {
    OutcomeTable t = tabulate(f, strict);
    bool sp = scan_strategy_proof(t, strict).ok;
    bool nb = scan_non_bossy(t, strict).ok;
    CHECK(scan_group_strategy_proof(t, strict).ok == (sp && nb));
  }

  // one-sided on separable: cttc is sp+nb yet group-manipulable
  EnumeratedDomain sep = enumerate_domain({2, 2}, Domain::separable);
  mechs.push_back(make_mechanism("cttc"));
  for (const Mechanism& f : mechs) {
    OutcomeTable t = tabulate(f, sep);
    if (scan_group_strategy_proof(t, sep).ok) {
      CHECK(scan_strategy_proof(t, sep).ok);
      CHECK(scan_non_bossy(t, sep).ok);
    }
  }
}

TEST_CASE("monotonicity scan against the joint-transformation oracle") {
  EnumeratedDomain lex = enumerate_domain({2, 2}, Domain::lexicographic);
  auto joint = [&](const OutcomeTable& t) {
    for (long long idx = 0; idx < lex.num_profiles(); ++idx) {
      std::vector<int> pick = lex.decode_profile(idx);
      Allocation x = allocation_from_id(t.alloc_of[idx], lex.shape);
      for (long long idx2 = 0; idx2 < lex.num_profiles(); ++idx2) {
        std::vector<int> pick2 = lex.decode_profile(idx2);
        bool transform = true;
        for (int i = 0; i < 2 && transform; ++i)
          transform = is_monotonic_transform(lex.prefs[pick2[i]], lex.prefs[pick[i]],
                                             bundle_of(x, i, lex.shape));
        if (transform && t.alloc_of[idx2] != t.alloc_of[idx]) return false;
      }
    }
    return true;
  };
  for (const char* name : {"bttc", "cttc", "no_trade", "multiple_serial_ir"}) {
    Mechanism f = make_mechanism(name);
    OutcomeTable t = tabulate(f, lex);
    ScanResult mono = scan_monotonic(t, lex);
    CHECK(mono.ok == joint(t));
    if (!mono.ok) CHECK(replay_deviation(*mono.witness, f, lex));
  }
}

static Mechanism bossy_flag() {
  // agent 3's report swings the 1<->2 trade while agent 3 always keeps his own
  return {"bossy_flag", [](const Market& mk) {
            Allocation a = endowment(mk.shape);
            if (mk.prefs[2].marg_order[0][0] != 2) std::swap(a.owner[0], a.owner[1]);
            return a;
          }};
}

TEST_CASE("a deliberately bossy mechanism and the lemma suite") {
  EnumeratedDomain common = enumerate_domain({3, 2}, Domain::lex_common);
  Mechanism f = bossy_flag();
  OutcomeTable t = tabulate(f, common);
  CHECK(scan_strategy_proof(t, common).ok);
  ScanResult nb = scan_non_bossy(t, common);
  REQUIRE_FALSE(nb.ok);
  CHECK(replay_deviation(*nb.witness, f, common));

  LemmaReport rep = lemma_checks(f, common);
  CHECK(rep.sp);
  CHECK_FALSE(rep.nb);
  CHECK(rep.lemma1 == "not applicable (mechanism is not strategy-proof and non-bossy)");

  // parallel scans report the identical first witness
  ScanResult nb3 = scan_non_bossy(t, common, 3);
  CHECK(nb3.witness->profile == nb.witness->profile);
  CHECK(nb3.witness->coalition == nb.witness->coalition);
  CHECK(nb3.witness->misreport == nb.witness->misreport);
}

TEST_CASE("lemma suite on the main mechanisms") {
  EnumeratedDomain lex = enumerate_domain({2, 2}, Domain::lexicographic);
  LemmaReport b = lemma_checks(make_mechanism("bttc"), lex);
  CHECK(b.sp);
  CHECK(b.nb);
  CHECK(b.monotonic);
  CHECK(b.lemma1 == "holds");
  CHECK(b.fact2 == "holds");

  EnumeratedDomain sep = enumerate_domain({2, 2}, Domain::separable);
  LemmaReport c = lemma_checks(make_mechanism("cttc"), sep);
  CHECK(c.sp);
  CHECK(c.nb);
  CHECK(c.monotonic);
  CHECK(c.lemma1 == "holds");
  CHECK(c.fact2 == "not applicable (needs lexicographic preferences)");

  LemmaReport m = lemma_checks(make_mechanism("multiple_serial_ir"), lex);
  CHECK_FALSE(m.sp);
  CHECK(m.lemma1 == "not applicable (mechanism is not strategy-proof and non-bossy)");
}

TEST_CASE("parallel scans match serial ones on a big domain") {
  EnumeratedDomain lex32 = enumerate_domain({3, 2}, Domain::lexicographic);
  Mechanism f = make_mechanism("bttc");
  OutcomeTable t1 = tabulate(f, lex32, 1);
  OutcomeTable t4 = tabulate(f, lex32, 4);
  CHECK(t1.alloc_of == t4.alloc_of);
  CHECK(scan_strategy_proof(t1, lex32, 4).ok == scan_strategy_proof(t1, lex32, 1).ok);
}

TEST_CASE("property code table") {
  CHECK(property_codes().size() == 11);
  CHECK(std::string(property_full_name("pe2")) == "pairwise efficiency");
  CHECK(std::string(property_full_name("tpe")) == "T'-types pairwise efficiency");
  CHECK(is_pointwise_code("ir"));
  CHECK_FALSE(is_pointwise_code("gsp"));
  CHECK_THROWS_AS(property_full_name("zz"), std::invalid_argument);
  CHECK_THROWS_AS(check_pointwise("sp", endowment({2, 2}), tu::ex1()), std::invalid_argument);
}
