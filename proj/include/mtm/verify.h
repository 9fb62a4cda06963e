#pragma once

// Desk-scale verification: exhaustive mechanism audits over enumerated
// domains, the benchmark satisfaction table, a backtracking search over all
// mechanisms subject to property constraints, and a machine replay of the
// three-profile impossibility argument for partial-trade efficiency.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtm/mechanisms.h"
#include "mtm/properties.h"

namespace mtm {

// ---- audits ---------------------------------------------------------------

struct PropertyVerdict {
  std::string code;
  bool ok = true;
  long long profile = -1;  // pointwise: first offending profile index
  std::optional<ImprovementWitness> improvement;
  std::optional<DeviationWitness> deviation;
};

struct AuditReport {
  std::string mechanism;
  std::string domain;  // e.g. "separable (2,2)"
  std::vector<PropertyVerdict> verdicts;
  const PropertyVerdict& verdict(const std::string& code) const;  // throws if absent
  bool satisfies(const std::vector<std::string>& codes) const;
};

// Audits `codes` (default: every known property) of f over ed. Pointwise
// properties report the first violating profile in index order; incentive
// scans follow the deterministic witness contracts of the property scans.
AuditReport audit_mechanism(const Mechanism& f, const EnumeratedDomain& ed,
                            const std::vector<std::string>& codes = {}, int jobs = 1,
                            const Guards& g = {});

std::string render_audit(const AuditReport& rep);

struct ReplayStats {
  int checked = 0;
  bool ok = true;
};

// Re-derives every witness in the report against fresh runs of f.
ReplayStats replay_report(const AuditReport& rep, const Mechanism& f, const EnumeratedDomain& ed);

// ---- the benchmark satisfaction table -------------------------------------

struct TableCell {
  bool expected = false, got = false;
};

struct IndependenceTable {
  std::vector<std::string> rows;  // mechanism names
  std::vector<std::string> cols;  // property codes
  std::vector<std::vector<TableCell>> cells;
  int diffs = 0;
  std::string rendered;
};

// One row per benchmark mechanism, one column per headline property, each row
// dropping a different property. The bossy example needs three agents, so its
// row is always audited on lexicographic (3,2); the other rows use (s, d).
IndependenceTable independence_table(const Shape& s, Domain d, int jobs = 1, const Guards& g = {});

// ---- constraint search over mechanisms ------------------------------------

struct SearchOptions {
  std::vector<std::string> require;       // property codes
  std::vector<std::vector<int>> allowed;  // per-agent pref indices; empty = whole domain
  int model_cap = 2;
  int jobs = 1;  // parallel pointwise filtering; the search itself is serial
  Guards guards;
};

struct ModelDiff {
  long long profile = -1;  // first profile where the two models diverge
  int a = -1, b = -1;      // their allocation ids there
};

struct SearchResult {
  std::string verdict;  // "UNSAT" | "UNIQUE" | "MULTIPLE"
  std::string claim;    // "desk-scale instance of Theorem N", possibly empty
  std::vector<std::vector<int32_t>> models;  // allocation id per profile, up to model_cap
  long long num_profiles = 0;
  long long num_allocs = 0;
  long long nodes = 0, backtracks = 0;
  std::optional<ModelDiff> diff;
  std::string label() const { return claim.empty() ? verdict : verdict + " (" + claim + ")"; }
};

// Decides whether any mechanism on the (restricted) domain satisfies all
// required properties. Variables are profiles in index order, values
// allocation ids ascending, with arc consistency over the unilateral-deviation
// graph; the first model found is the lexicographically smallest outcome
// table, so results are reproducible.
SearchResult search_mechanisms(const EnumeratedDomain& ed, const SearchOptions& opt);

// Which impossibility or uniqueness statement a (require, domain) pair
// instantiates at desk scale; empty when none applies.
std::string claim_label(std::vector<std::string> require, Domain d, const Shape& s);

// ---- the three-profile impossibility replay -------------------------------

struct A5Report {
  bool ok = false;
  std::vector<std::string> lines;
  std::string rendered() const;
};

// Rebuilds the lexicographic (2,3) profiles of the partial-trade impossibility
// argument, recomputes the admissible outcome sets, and verifies that either
// candidate choice at the honest profile hands some agent a profitable
// misreport.
A5Report replay_proof_a5();

// Per-agent preference lists spanning the closure of that argument inside the
// full lexicographic (2,3) domain.
std::vector<std::vector<int>> a5_closure_allowed(const EnumeratedDomain& ed);

}  // namespace mtm
