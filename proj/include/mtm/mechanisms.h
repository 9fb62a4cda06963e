#pragma once

// The mechanisms under study: type-wise TTC (cTTC), whole-endowment TTC
// (bTTC), and the hand-built mechanisms used in the independence examples.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtm/core.h"

namespace mtm {

// One trading cycle: agents[k] points at object objs[k] = (type, owner), and
// the owner is agents[k+1 mod size]. type == -1 means a whole endowment.
struct Cycle {
  std::vector<int> agents;
  std::vector<std::pair<int, int>> objs;
};

struct Trace {
  std::vector<std::vector<Cycle>> steps;  // cycles executed per step
};

// "2→H3→3→H2→2"; whole endowments render as e2.
std::string render_cycle(const Cycle& c, const std::vector<std::string>& type_names);

// Housing-market TTC on one type. marg_order[i] = agent i's ranking of the
// owners, best first. Returns assignment[i] = owner whose object agent i gets.
// All cycles present in a step execute simultaneously; one_cycle_per_step
// executes only the cycle containing the lowest agent (the outcome is the
// same either way — asserted in tests).
std::vector<int> ttc_single_type(const std::vector<std::vector<int>>& marg_order,
                                 Trace* trace = nullptr, int type = 0,
                                 bool one_cycle_per_step = false);

// Per-type TTC on the marginals. Strict-kind prefs are accepted when they are
// in fact separable (marginals derived on the fly); otherwise throws.
Allocation cttc(const Market& mk, Trace* trace = nullptr);

// TTC over whole endowments (restriction of each preference to
// {e_1,...,e_n}). On lexicographic markets the step-wise object-pointing
// construction runs as well and the two outcomes are asserted equal; the
// trace then carries the object-level cycles.
Allocation bttc(const Market& mk, Trace* trace = nullptr);

Allocation no_trade(const Market& mk);

// Agents in `order` (0-based; empty = identity) pick their best bundle still
// constructible from the per-type pools of unassigned objects.
Allocation serial_dictatorship(const Market& mk, std::vector<int> order = {});

// Step 0 materializes the individually rational allocations; agent i_k then
// receives the best allotment compatible with the picks so far.
Allocation multiple_serial_ir(const Market& mk, std::vector<int> order = {},
                              const Guards& g = {});

// Case-split mechanism on n=3, m=2 lexicographic markets: when agent 1 tops
// agent i's full endowment (i ∈ {2,3}) and the designated allocation y
// Pareto-dominates bTTC(R), return y; otherwise bTTC(R).
Allocation bossy_hybrid(const Market& mk);

// `target` iff every agent weakly prefers target_i to own endowment, else e.
Allocation y_restricted_unanimity(const Market& mk, const Allocation& target);

// Common-importance lexicographic, m=2, type 0 (houses) most important: TTC
// on houses; if agent 1 lost his house, his endowed car drops to the bottom
// of his car marginal; then TTC on cars.
Allocation house_then_penalized_car(const Market& mk);

struct MechanismOptions {
  std::vector<int> order;              // serial_dictatorship / multiple_serial_ir
  std::optional<Allocation> target;    // y_restricted_unanimity
  Guards guards;
};

struct Mechanism {
  std::string name;
  std::function<Allocation(const Market&)> run;
};

// Names: bttc cttc no_trade serial_dictatorship multiple_serial_ir
// bossy_hybrid y_restricted_unanimity house_then_penalized_car.
// Throws std::invalid_argument on unknown names or missing options.
Mechanism make_mechanism(const std::string& name, const MechanismOptions& opts = {});
std::vector<std::string> mechanism_names();

}  // namespace mtm
