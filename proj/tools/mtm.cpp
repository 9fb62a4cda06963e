// mtm — multiple-type housing market toolkit.
// Subcommands: run, audit, table, search, enumerate, replay-a5.
// Exit codes: 0 success, 1 --expect mismatch, 2 usage or guard refusal.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtm/core.h"
#include "mtm/io.h"
#include "mtm/mechanisms.h"
#include "mtm/properties.h"
#include "mtm/verify.h"

using nlohmann::json;
using namespace mtm;

namespace {

constexpr int kSchemaVersion = 1;

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = (int)j;
  for (size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = (int)i;
    for (size_t j = 1; j <= b.size(); ++j) {
      int next = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = row[j];
      row[j] = next;
    }
  }
  return row[b.size()];
}

std::string suggest(const std::string& got, const std::vector<std::string>& known) {
  int best = 1 << 20;
  std::string who;
  for (const std::string& k : known) {
    int d = edit_distance(got, k);
    if (d < best) best = d, who = k;
  }
  if (best <= (int)std::max<size_t>(2, got.size() / 2)) return "; did you mean " + who + "?";
  std::string all = "; known:";
  for (const std::string& k : known) all += " " + k;
  return all;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_codes(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace((unsigned char)c)) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> parse_require(const std::string& s) {
  std::vector<std::string> codes = split_codes(s);
  std::vector<std::string> known = property_codes();
  for (const std::string& c : codes)
    if (std::find(known.begin(), known.end(), c) == known.end())
      throw UsageError("unknown property code '" + c + "'" + suggest(c, known));
  return codes;
}

Domain parse_domain(const std::string& s) {
  if (auto d = domain_from_string(s)) return *d;
  throw UsageError("unknown domain '" + s + "'" +
                   suggest(s, {"strict", "separable", "lexicographic", "lex-common"}));
}

// relative market paths fall back to $MTM_MARKETS
std::string slurp_market_file(const std::string& path) {
  auto try_read = [](const std::string& p) -> std::optional<std::string> {
    std::ifstream in(p);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (auto text = try_read(path)) return *text;
  if (!path.empty() && path[0] != '/') {
    if (const char* dir = std::getenv("MTM_MARKETS"))
      if (auto text = try_read(std::string(dir) + "/" + path)) return *text;
  }
  throw UsageError("cannot open market file '" + path + "'");
}

std::vector<int> parse_order(const std::string& s, int n) {
  std::vector<int> order;
  for (const std::string& tok : split_codes(s)) {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 1 || v > n)
      throw UsageError("--order entries are agent labels 1.." + std::to_string(n));
    order.push_back(v - 1);
  }
  return order;
}

Mechanism build_mechanism(const std::string& name, const std::string& order_flag,
                          const std::string& target_flag, const Market* mk, const Guards& g) {
  std::vector<std::string> known = mechanism_names();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw UsageError("unknown mechanism '" + name + "'" + suggest(name, known));
  MechanismOptions opts;
  opts.guards = g;
  if (!order_flag.empty()) {
    if (!mk) throw UsageError("--order requires a market context; pass --n/--m via audit");
    opts.order = parse_order(order_flag, mk->shape.n);
  }
  if (!target_flag.empty()) {
    if (!mk) throw UsageError("--target requires a market context");
    opts.target = parse_allocation(target_flag, mk->shape, mk->type_names);
  }
  return make_mechanism(name, opts);
}

int finish(const std::string& verdict, const std::string& expect) {
  if (!expect.empty() && verdict != expect) {
    std::cout << "expect mismatch: got \"" << verdict << "\", want \"" << expect << "\"\n";
    return 1;
  }
  return 0;
}

std::string audit_row(const AuditReport& rep) {
  std::string row;
  for (const PropertyVerdict& v : rep.verdicts) {
    if (!row.empty()) row += ' ';
    row += v.code;
    row += v.ok ? '+' : '-';
  }
  return row;
}

// ---- subcommand payloads ----------------------------------------------------

struct RunArgs {
  std::string mechanism, market, order, target, expect;
  bool trace = false, json_out = false;
};

int cmd_run(const RunArgs& a) {
  Market mk = parse_market(slurp_market_file(a.market));
  Guards g;
  MechanismOptions opts;
  opts.guards = g;
  if (!a.order.empty()) opts.order = parse_order(a.order, mk.shape.n);
  if (!a.target.empty()) opts.target = parse_allocation(a.target, mk.shape, mk.type_names);
  std::vector<std::string> known = mechanism_names();
  if (std::find(known.begin(), known.end(), a.mechanism) == known.end())
    throw UsageError("unknown mechanism '" + a.mechanism + "'" + suggest(a.mechanism, known));
  Trace tr;
  Allocation out;
  if (a.trace) {
    if (a.mechanism == "cttc")
      out = cttc(mk, &tr);
    else if (a.mechanism == "bttc")
      out = bttc(mk, &tr);
    else
      throw UsageError("--trace is supported for cttc and bttc");
  } else {
    out = make_mechanism(a.mechanism, opts).run(mk);
  }
  std::string rendered = render_allocation(out, mk.shape, mk.type_names);
  if (a.json_out) {
    json j{{"schema_version", kSchemaVersion},
           {"mechanism", a.mechanism},
           {"n", mk.shape.n},
           {"m", mk.shape.m},
           {"allocation", rendered},
           {"owner", out.owner}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "mechanism: " << a.mechanism << "\n";
    std::cout << "market: n=" << mk.shape.n << " m=" << mk.shape.m << " domain "
              << to_string(mk.domain) << "\n";
    for (size_t s = 0; s < tr.steps.size(); ++s)
      for (const Cycle& c : tr.steps[s])
        std::cout << "step " << s + 1 << ": " << render_cycle(c, mk.type_names) << "\n";
    std::cout << "allocation: " << rendered << "\n";
  }
  return finish(rendered, a.expect);
}

struct AuditArgs {
  std::string mechanism, domain = "separable", require, order, target, expect;
  int n = 2, m = 2, jobs = 1;
  bool guard_override = false, json_out = false;
};

int cmd_audit(const AuditArgs& a) {
  Guards g;
  g.override_all = a.guard_override;
  Domain d = parse_domain(a.domain);
  EnumeratedDomain ed = enumerate_domain({a.n, a.m}, d, g);
  Market ctx;
  ctx.shape = ed.shape;
  ctx.type_names = ed.type_names;
  Mechanism f = build_mechanism(a.mechanism, a.order, a.target, &ctx, g);
  std::vector<std::string> codes = a.require.empty() ? property_codes() : parse_require(a.require);
  AuditReport rep = audit_mechanism(f, ed, codes, a.jobs, g);
  std::string row = audit_row(rep);
  if (a.json_out) {
    json verdicts = json::array();
    for (const PropertyVerdict& v : rep.verdicts) {
      json jv{{"code", v.code}, {"ok", v.ok}};
      if (!v.ok) jv["profile"] = v.profile;
      verdicts.push_back(jv);
    }
    json j{{"schema_version", kSchemaVersion},
           {"mechanism", rep.mechanism},
           {"domain", rep.domain},
           {"verdicts", verdicts},
           {"row", row}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << render_audit(rep);
    std::cout << "row: " << row << "\n";
  }
  return finish(row, a.expect);
}

struct TableArgs {
  std::string domain = "separable", expect;
  int n = 2, m = 2, jobs = 1;
  bool guard_override = false, json_out = false;
};

int cmd_table(const TableArgs& a) {
  Guards g;
  g.override_all = a.guard_override;
  IndependenceTable tab = independence_table({a.n, a.m}, parse_domain(a.domain), a.jobs, g);
  std::string verdict = "diffs=" + std::to_string(tab.diffs);
  if (a.json_out) {
    json cells = json::object();
    for (size_t r = 0; r < tab.rows.size(); ++r) {
      std::string row;
      for (size_t c = 0; c < tab.cols.size(); ++c) row += tab.cells[r][c].got;
      cells[tab.rows[r]] = row;
    }
    json j{{"schema_version", kSchemaVersion},
           {"rows", tab.rows},
           {"cols", tab.cols},
           {"cells", cells},
           {"diffs", tab.diffs}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << tab.rendered;
  }
  return finish(verdict, a.expect);
}

struct SearchArgs {
  std::string domain, require, subdomain, expect;
  int n = 2, m = 2, jobs = 1, models = 2;
  bool guard_override = false, stats = false, json_out = false;
};

int cmd_search(const SearchArgs& a) {
  Guards g;
  g.override_all = a.guard_override;
  Domain d = parse_domain(a.domain);
  EnumeratedDomain ed = enumerate_domain({a.n, a.m}, d, g);
  SearchOptions opt;
  opt.require = parse_require(a.require);
  opt.model_cap = a.models;
  opt.jobs = a.jobs;
  opt.guards = g;
  if (!a.subdomain.empty()) {
    if (a.subdomain != "a5-closure")
      throw UsageError("unknown subdomain '" + a.subdomain + "'; known: a5-closure");
    if (a.n != 3 || a.m != 3 || d != Domain::lexicographic)
      throw UsageError("subdomain a5-closure lives on lexicographic (3,3)");
    opt.allowed = a5_closure_allowed(ed);
  }
  SearchResult res = search_mechanisms(ed, opt);
  if (a.json_out) {
    json j{{"schema_version", kSchemaVersion},
           {"domain", to_string(d)},
           {"n", a.n},
           {"m", a.m},
           {"require", opt.require},
           {"profiles", res.num_profiles},
           {"allocations", res.num_allocs},
           {"verdict", res.verdict},
           {"claim", res.claim},
           {"label", res.label()},
           {"nodes", res.nodes},
           {"backtracks", res.backtracks}};
    if (res.diff) j["model_diff_profile"] = res.diff->profile;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "search: " << to_string(d) << " (" << a.n << "," << a.m << "), require";
    for (size_t k = 0; k < opt.require.size(); ++k)
      std::cout << (k ? "," : " ") << opt.require[k];
    std::cout << "\n";
    std::cout << "profiles: " << res.num_profiles << "  allocations per profile: " << res.num_allocs
              << "\n";
    if (a.stats)
      std::cout << "nodes: " << res.nodes << "  backtracks: " << res.backtracks << "\n";
    if (res.diff)
      std::cout << "models differ at profile " << res.diff->profile << "\n";
    std::cout << "verdict: " << res.label() << "\n";
  }
  return finish(res.label(), a.expect);
}

struct EnumArgs {
  std::string domain, list;
  int n = 2, m = 2, limit = 50;
  bool guard_override = false, json_out = false;
};

int cmd_enumerate(const EnumArgs& a) {
  Guards g;
  g.override_all = a.guard_override;
  Domain d = parse_domain(a.domain);
  EnumeratedDomain ed = enumerate_domain({a.n, a.m}, d, g);
  if (a.json_out) {
    json j{{"schema_version", kSchemaVersion},
           {"domain", to_string(d)},
           {"n", a.n},
           {"m", a.m},
           {"preferences_per_agent", ed.num_prefs()},
           {"profiles", ed.num_profiles()}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "domain: " << to_string(d) << " (" << a.n << "," << a.m << ")\n";
  std::cout << "preferences per agent: " << ed.num_prefs() << "\n";
  std::cout << "profiles: " << ed.num_profiles() << "\n";
  if (a.list == "preferences") {
    long long cap = std::min<long long>(ed.num_prefs(), a.limit);
    for (long long r = 0; r < cap; ++r) {
      std::cout << "  " << r << ":";
      for (int b : ed.prefs[r].order)
        std::cout << " " << render_bundle(bundle_from_id(b, ed.shape), ed.type_names);
      std::cout << "\n";
    }
    if (cap < ed.num_prefs())
      std::cout << "  ... (" << ed.num_prefs() - cap << " more; raise --limit)\n";
  } else if (!a.list.empty()) {
    throw UsageError("--list takes 'preferences'");
  }
  return 0;
}

int cmd_replay_a5(const std::string& expect, bool json_out) {
  A5Report rep = replay_proof_a5();
  std::string verdict = rep.ok ? "ok" : "failed";
  if (json_out) {
    json j{{"schema_version", kSchemaVersion}, {"ok", rep.ok}, {"lines", rep.lines}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << rep.rendered();
  }
  return finish(verdict, expect);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiple-type housing market mechanisms: run, audit, search"};
  app.require_subcommand(1);

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "run a mechanism on a market file");
  run->add_option("--mechanism", ra.mechanism)->required();
  run->add_option("--market", ra.market, "market file (relative paths also try $MTM_MARKETS)")
      ->required();
  run->add_option("--order", ra.order, "agent labels, e.g. 2,1");
  run->add_option("--target", ra.target, "allocation literal for y_restricted_unanimity");
  run->add_flag("--trace", ra.trace, "print trading cycles (cttc, bttc)");
  run->add_flag("--json", ra.json_out);
  run->add_option("--expect", ra.expect, "expected allocation; mismatch exits 1");

  AuditArgs aa;
  CLI::App* audit = app.add_subcommand("audit", "exhaustively audit a mechanism on a domain");
  audit->add_option("--mechanism", aa.mechanism)->required();
  audit->add_option("--n", aa.n);
  audit->add_option("--m", aa.m);
  audit->add_option("--domain", aa.domain);
  audit->add_option("--require", aa.require, "property codes, comma separated; default all");
  audit->add_option("--order", aa.order);
  audit->add_option("--target", aa.target);
  audit->add_option("--jobs", aa.jobs);
  audit->add_flag("--guard-override", aa.guard_override);
  audit->add_flag("--json", aa.json_out);
  audit->add_option("--expect", aa.expect, "expected verdict row, e.g. 'ir+ sp-'");

  TableArgs ta;
  CLI::App* table = app.add_subcommand("table", "benchmark satisfaction table with diffs");
  table->add_option("--n", ta.n);
  table->add_option("--m", ta.m);
  table->add_option("--domain", ta.domain);
  table->add_option("--jobs", ta.jobs);
  table->add_flag("--guard-override", ta.guard_override);
  table->add_flag("--json", ta.json_out);
  table->add_option("--expect", ta.expect, "e.g. diffs=0");

  SearchArgs sa;
  CLI::App* search = app.add_subcommand("search", "decide if any mechanism satisfies the codes");
  search->add_option("--n", sa.n);
  search->add_option("--m", sa.m);
  search->add_option("--domain", sa.domain)->required();
  search->add_option("--require", sa.require)->required();
  search->add_option("--subdomain", sa.subdomain, "named restriction: a5-closure");
  search->add_option("--models", sa.models, "model cap for MULTIPLE detection");
  search->add_option("--jobs", sa.jobs);
  search->add_flag("--stats", sa.stats, "print nodes/backtracks");
  search->add_flag("--guard-override", sa.guard_override);
  search->add_flag("--json", sa.json_out);
  search->add_option("--expect", sa.expect, "expected verdict label; mismatch exits 1");

  EnumArgs ea;
  CLI::App* enu = app.add_subcommand("enumerate", "count or list a preference domain");
  enu->add_option("--n", ea.n);
  enu->add_option("--m", ea.m);
  enu->add_option("--domain", ea.domain)->required();
  enu->add_option("--list", ea.list, "'preferences' lists orders best-first");
  enu->add_option("--limit", ea.limit);
  enu->add_flag("--guard-override", ea.guard_override);
  enu->add_flag("--json", ea.json_out);

  std::string a5_expect;
  bool a5_json = false;
  CLI::App* a5 = app.add_subcommand("replay-a5", "replay the three-profile impossibility");
  a5->add_option("--expect", a5_expect, "'ok' asserts the replay goes through");
  a5->add_flag("--json", a5_json);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(ra);
    if (audit->parsed()) return cmd_audit(aa);
    if (table->parsed()) return cmd_table(ta);
    if (search->parsed()) return cmd_search(sa);
    if (enu->parsed()) return cmd_enumerate(ea);
    if (a5->parsed()) return cmd_replay_a5(a5_expect, a5_json);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const GuardError& e) {
    std::cerr << "guard refusal: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "market parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
