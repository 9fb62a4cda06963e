#pragma once

// Allocation-level efficiency/rationality checkers and mechanism-level
// incentive checkers. Every negative verdict carries a witness that replays
// against the definition it violates.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtm/core.h"
#include "mtm/mechanisms.h"

namespace mtm {

struct ImprovementWitness {
  // pareto | coordinatewise | pairwise-coordinatewise | pairwise |
  // coalitional | coalitional-literal | tprime-pairwise | unanimity | ir
  std::string kind;
  Allocation improved;
  std::vector<int> agents;  // beneficiaries; ordered members for swaps/rotations
  std::vector<int> types;   // types touched (empty = whole bundles)
};

struct PropertyResult {
  bool ok = true;
  std::optional<ImprovementWitness> witness;
  explicit operator bool() const { return ok; }
};

PropertyResult is_individually_rational(const Allocation& a, const Market& mk);
// pool: reuse a precomputed enumerate_allocations(mk.shape) list
PropertyResult is_pareto_efficient(const Allocation& a, const Market& mk, const Guards& g = {},
                                   const std::vector<Allocation>* pool = nullptr);
PropertyResult is_coordinatewise_efficient(const Allocation& a, const Market& mk);
PropertyResult is_pairwise_coordinatewise_efficient(const Allocation& a, const Market& mk);
PropertyResult is_pairwise_efficient(const Allocation& a, const Market& mk);
// improvement reading: every member strictly prefers the bundle handed over
// by the next member of the rotation. literal_reading evaluates the usual
// chain x_{i_l} P_{i_l} x_{i_{l+1}} as written (see docs/claims.md).
PropertyResult is_coalitionally_efficient(const Allocation& a, const Market& mk,
                                          bool literal_reading = false);
PropertyResult is_tprime_pairwise_efficient(const Allocation& a, const Market& mk);
// true iff no unanimously best allocation exists or a equals it
PropertyResult unanimity_check(const Allocation& a, const Market& mk);

// Certifies w against `a`: structural constraint of w.kind plus the required
// strict/weak preference pattern.
bool replay_improvement(const ImprovementWitness& w, const Allocation& a, const Market& mk);

// Mechanism-level checks over a fully enumerated domain ----------------------

struct DeviationWitness {
  std::string kind;  // sp | gsp | nb | mono | fact2
  long long profile = 0;
  std::vector<int> coalition;  // deviating agents (singleton except gsp)
  std::vector<int> misreport;  // preference indices aligned with coalition
  Allocation honest, deviated;
};

struct OutcomeTable {
  std::vector<int32_t> alloc_of;  // allocation id per profile index
};

OutcomeTable tabulate(const Mechanism& f, const EnumeratedDomain& ed, int jobs = 1,
                      const Guards& g = {});

struct ScanResult {
  bool ok = true;
  std::optional<DeviationWitness> witness;
  explicit operator bool() const { return ok; }
};

// Exhaustive scans; first violation in (profile, agent, misreport) order —
// for gsp in (coalition size, coalition, profile, joint misreport) order.
// jobs parallelize without changing the reported witness.
ScanResult scan_strategy_proof(const OutcomeTable& t, const EnumeratedDomain& ed, int jobs = 1);
ScanResult scan_non_bossy(const OutcomeTable& t, const EnumeratedDomain& ed, int jobs = 1);
ScanResult scan_group_strategy_proof(const OutcomeTable& t, const EnumeratedDomain& ed,
                                     const Guards& g = {});
ScanResult scan_monotonic(const OutcomeTable& t, const EnumeratedDomain& ed);

ScanResult is_strategy_proof(const Mechanism& f, const EnumeratedDomain& ed, int jobs = 1,
                             const Guards& g = {});
ScanResult is_non_bossy(const Mechanism& f, const EnumeratedDomain& ed, int jobs = 1,
                        const Guards& g = {});
ScanResult is_group_strategy_proof(const Mechanism& f, const EnumeratedDomain& ed, int jobs = 1,
                                   const Guards& g = {});
ScanResult is_monotonic(const Mechanism& f, const EnumeratedDomain& ed, int jobs = 1,
                        const Guards& g = {});

// First profitable misreport at this one market, scanning agents then the
// domain's preference list in order; mk's preferences must belong to ed.
std::optional<DeviationWitness> profitable_misreport(const Mechanism& f, const Market& mk,
                                                     const EnumeratedDomain& ed);

bool replay_deviation(const DeviationWitness& w, const Mechanism& f, const EnumeratedDomain& ed);

// Monotonicity-related sanity suite: strategy-proof + non-bossy must imply
// monotonic, and a change of the most-important marginal that leaves the
// agent's object of that type in place must leave the whole outcome in place.
struct LemmaReport {
  bool sp = false, nb = false, monotonic = false;
  std::string lemma1;  // "holds" | "vacuous (...)" | "VIOLATED"
  std::string fact2;   // "holds" | "not applicable (...)" | "VIOLATED"
  std::optional<DeviationWitness> counterexample;
};
LemmaReport lemma_checks(const Mechanism& f, const EnumeratedDomain& ed, const Guards& g = {});

// Property codes -------------------------------------------------------------

// ir sp gsp nb pe ce pce pe2 coal tpe unan
std::vector<std::string> property_codes();
const char* property_full_name(const std::string& code);  // throws on unknown code
bool is_pointwise_code(const std::string& code);          // false for sp/gsp/nb
PropertyResult check_pointwise(const std::string& code, const Allocation& a, const Market& mk,
                               const std::vector<Allocation>* pool = nullptr);

}  // namespace mtm
