#pragma once

// Multiple-type housing markets: n agents, m object types, each agent endowed
// with one object per type. Bundles, allocations, preference domains
// (strict / separable / lexicographic / common-importance lexicographic),
// validation and exhaustive enumeration at desk scale.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtm {

struct Shape {
  int n = 0;  // agents, >= 2
  int m = 0;  // object types, >= 1
  bool operator==(const Shape&) const = default;
};

// owner index per type; bundle (o_{w0}^0, ..., o_{w(m-1)}^(m-1))
using Bundle = std::vector<int>;

// Dense bundle id: owner indices in type order, type 0 most significant.
int num_bundles(const Shape& s);
int bundle_id(const Bundle& b, const Shape& s);
Bundle bundle_from_id(int id, const Shape& s);
std::vector<Bundle> enumerate_bundles(const Shape& s);

struct Allocation {
  // owner[i][t] = owner index of the type-t object agent i consumes.
  // Feasible iff every type column is a permutation of 0..n-1.
  std::vector<std::vector<int>> owner;
  bool operator==(const Allocation&) const = default;
};

Allocation endowment(const Shape& s);
void check_allocation(const Allocation& a, const Shape& s);  // throws std::logic_error
int bundle_of(const Allocation& a, int agent, const Shape& s);

// Permutation <-> Lehmer index (lexicographic rank among all n! permutations).
long long factorial(int n);
int perm_index(const std::vector<int>& p);
std::vector<int> perm_from_index(int idx, int n);

// Allocation id: per-type column permutation indices, type 0 most significant.
long long num_allocations(const Shape& s);  // (n!)^m, saturating
int allocation_id(const Allocation& a, const Shape& s);
Allocation allocation_from_id(int id, const Shape& s);

enum class Domain { strict, separable, lexicographic, lex_common };
const char* to_string(Domain d);
std::optional<Domain> domain_from_string(std::string_view s);

enum class PrefKind { strict, separable, lexicographic };

struct Pref {
  PrefKind kind = PrefKind::strict;
  std::vector<int> order;  // bundle ids, best first
  std::vector<int> rank;   // rank[bundle id] = position in order
  // filled for separable/lexicographic kinds:
  std::vector<std::vector<int>> marg_order;  // [t] = owners, best first
  std::vector<std::vector<int>> marg_rank;   // [t][owner]
  std::vector<int> importance;               // lexicographic only; types, most important first
  bool operator==(const Pref&) const = default;

  bool prefers(int b1, int b2) const { return rank[b1] < rank[b2]; }
  bool weakly_prefers(int b1, int b2) const { return rank[b1] <= rank[b2]; }
  int top() const { return order[0]; }
};

Pref pref_from_order(std::vector<int> order, const Shape& s);

struct SepInfo {
  std::vector<std::vector<int>> marg_order, marg_rank;
};

// Extracts marginals (single-type comparisons against the top bundle) and
// verifies the dominance condition over all bundle pairs. Returns a violating
// pair (x,y) — x weakly marginal-dominates y yet ranks below — or nullopt with
// `out` filled.
std::optional<std::pair<int, int>> separable_violation(const Pref& p, const Shape& s,
                                                       SepInfo* out = nullptr);

// In-place upgrade: fills marginal structure and sets kind=separable.
// Throws std::runtime_error naming the violating pair if not separable.
void make_separable(Pref& p, const Shape& s);

// Importance order pi such that the lexicographic order induced by the
// marginals equals p.order, or nullopt. Requires marginal structure.
std::optional<std::vector<int>> detect_lexicographic(const Pref& p, const Shape& s);

Pref lexicographic_from(const std::vector<std::vector<int>>& marg_order,
                        const std::vector<int>& pi, const Shape& s);

// Objects (type, owner) in the linear list representation of a lexicographic
// preference: all objects of the most important type in marginal order, then
// the next type, etc.
std::vector<std::pair<int, int>> linear_object_list(const Pref& p, const Shape& s);

// Agents ordered by the rank of their full endowment bundle under p.
std::vector<int> restrict_to_endowments(const Pref& p, const Shape& s);

// True iff the weak lower contour set of `oldp` at bundle `at` is contained in
// that of `newp` (Maskin monotonic transformation at `at`).
bool is_monotonic_transform(const Pref& newp, const Pref& oldp, int at);

struct Market {
  Shape shape;
  Domain domain = Domain::strict;
  std::vector<Pref> prefs;               // size n
  std::vector<std::string> type_names;   // size m
  bool operator==(const Market&) const = default;
};

std::vector<std::string> default_type_names(int m);
// Market-level consistency: pref kinds vs domain tag, common importance, etc.
void check_market(const Market& mk);

struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Guards {
  long long strict_bundle_cap = 12;      // n^m bound for strict enumeration
  long long pref_count_cap = 4000000;    // materialized preference lists
  long long alloc_count_cap = 20736;     // (n!)^m materialization
  long long profile_count_cap = 1000000; // exhaustive profile scans
  long long csp_var_cap = 10000;         // search variables
  bool override_all = false;

  void require(bool ok, const std::string& what) const {
    if (!ok && !override_all)
      throw GuardError("guard: " + what + " (rerun with --guard-override to force)");
  }
};

std::vector<Allocation> enumerate_allocations(const Shape& s, const Guards& g = {});
long long count_preferences(const Shape& s, Domain d);  // without materializing
std::vector<Pref> enumerate_preferences(const Shape& s, Domain d, const Guards& g = {});

// A fully enumerated preference domain with mixed-radix profile indexing
// (agent 0 most significant).
struct EnumeratedDomain {
  Shape shape;
  Domain tag = Domain::strict;
  std::vector<Pref> prefs;
  std::vector<std::string> type_names;

  long long num_prefs() const { return (long long)prefs.size(); }
  long long num_profiles() const;
  std::vector<int> decode_profile(long long idx) const;
  long long encode_profile(const std::vector<int>& pick) const;
  Market market_at(long long idx) const;
};

EnumeratedDomain enumerate_domain(const Shape& s, Domain d, const Guards& g = {});

}  // namespace mtm
