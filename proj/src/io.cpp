#include "mtm/io.h"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <sstream>

namespace mtm {

std::string render_object(int type, int owner, const std::vector<std::string>& names) {
  return names[type] + std::to_string(owner + 1);
}

std::string render_bundle(const Bundle& b, const std::vector<std::string>& names) {
  std::string out = "(";
  for (size_t t = 0; t < b.size(); ++t) {
    if (t) out += ",";
    out += render_object((int)t, b[t], names);
  }
  return out + ")";
}

std::string render_allocation(const Allocation& a, const Shape& s,
                              const std::vector<std::string>& names) {
  std::string out = "(";
  for (int i = 0; i < s.n; ++i) {
    if (i) out += ",";
    out += render_bundle(a.owner[i], names);
  }
  return out + ")";
}

namespace {

struct Loc {
  int line = 0;
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
  }
};

// label = <type name><1-based owner>, type names are letters-only so the split
// point is unambiguous
std::pair<int, int> parse_object(const std::string& label, const Shape& s,
                                 const std::vector<std::string>& names, const Loc& at) {
  for (int t = 0; t < s.m; ++t) {
    const std::string& nm = names[t];
    if (label.size() <= nm.size() || label.compare(0, nm.size(), nm) != 0) continue;
    std::string digits = label.substr(nm.size());
    if (digits.find_first_not_of("0123456789") != std::string::npos) continue;
    int owner = std::stoi(digits) - 1;
    if (owner < 0 || owner >= s.n) at.fail("object '" + label + "': owner out of range");
    return {t, owner};
  }
  at.fail("unknown object label '" + label + "'");
}

Bundle parse_bundle_text(const std::string& text, const Shape& s,
                         const std::vector<std::string>& names, const Loc& at) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')')
    at.fail("bundle '" + text + "': expected (obj,...,obj)");
  Bundle b(s.m, -1);
  std::string inner = text.substr(1, text.size() - 2);
  std::stringstream ss(inner);
  std::string item;
  int count = 0;
  while (std::getline(ss, item, ',')) {
    auto [t, owner] = parse_object(item, s, names, at);
    if (count >= s.m) at.fail("bundle '" + text + "': too many objects");
    if (t != count) at.fail("bundle '" + text + "': expected a " + names[count] + " object at position " +
                            std::to_string(count + 1));
    b[count++] = owner;
  }
  if (count != s.m) at.fail("bundle '" + text + "': expected one object per type");
  return b;
}

int parse_int(const std::string& tok, const Loc& at) {
  try {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    at.fail("expected an integer, got '" + tok + "'");
  }
}

struct Line {
  int number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> lines;
  std::stringstream ss(text);
  std::string raw;
  int number = 0;
  while (std::getline(ss, raw)) {
    ++number;
    std::stringstream ls(raw);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty() || toks[0][0] == '#') continue;
    lines.push_back({number, std::move(toks)});
  }
  return lines;
}

class TextParser {
 public:
  explicit TextParser(const std::string& text) : lines_(tokenize(text)) {}

  Market run() {
    expect_key("schema_version");
    Loc at = loc();
    if (parse_int(value_of("schema_version"), at) != 1) at.fail("unsupported schema_version");
    advance();

    Market mk;
    expect_key("n");
    mk.shape.n = parse_int(value_of("n"), loc());
    advance();
    expect_key("m");
    mk.shape.m = parse_int(value_of("m"), loc());
    advance();
    if (mk.shape.n < 2 || mk.shape.m < 1) loc().fail("need n >= 2 and m >= 1");

    if (!done() && key() == "types") {
      if ((int)cur().tokens.size() != 1 + mk.shape.m)
        loc().fail("types: expected " + std::to_string(mk.shape.m) + " names");
      for (int t = 0; t < mk.shape.m; ++t) {
        std::string nm = cur().tokens[1 + t];
        if (nm.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz") !=
            std::string::npos)
          loc().fail("type name '" + nm + "' must be letters only");
        mk.type_names.push_back(nm);
      }
      for (int t = 0; t < mk.shape.m; ++t)
        for (int u = t + 1; u < mk.shape.m; ++u)
          if (mk.type_names[t] == mk.type_names[u]) loc().fail("duplicate type name");
      advance();
    } else {
      mk.type_names = default_type_names(mk.shape.m);
    }

    expect_key("domain");
    auto dom = domain_from_string(value_of("domain"));
    if (!dom) loc().fail("unknown domain '" + value_of("domain") + "'");
    mk.domain = *dom;
    advance();

    for (int i = 0; i < mk.shape.n; ++i) mk.prefs.push_back(parse_agent(mk, i));
    if (!done()) loc().fail("unexpected content after last agent");
    try {
      check_market(mk);
    } catch (const std::exception& ex) {
      throw ParseError(ex.what());
    }
    return mk;
  }

 private:
  const std::vector<Line> lines_;
  size_t pos_ = 0;

  bool done() const { return pos_ >= lines_.size(); }
  const Line& cur() const {
    if (done()) throw ParseError("unexpected end of input");
    return lines_[pos_];
  }
  Loc loc() const { return Loc{done() ? (lines_.empty() ? 0 : lines_.back().number) : cur().number}; }
  const std::string& key() const { return cur().tokens[0]; }
  void advance() { ++pos_; }

  void expect_key(const std::string& k) {
    if (done()) throw ParseError("unexpected end of input: expected '" + k + "'");
    if (key() != k) loc().fail("expected '" + k + "', got '" + key() + "'");
  }
  std::string value_of(const std::string& k) {
    expect_key(k);
    if (cur().tokens.size() != 2) loc().fail("'" + k + "' takes exactly one value");
    return cur().tokens[1];
  }

  std::vector<int> parse_marginal(const Market& mk, int t) {
    expect_key("marginal");
    Loc at = loc();
    const auto& toks = cur().tokens;
    if (toks.size() < 2 || toks[1] != mk.type_names[t] + ":")
      at.fail("expected 'marginal " + mk.type_names[t] + ":'");
    if ((int)toks.size() != 2 + mk.shape.n)
      at.fail("marginal " + mk.type_names[t] + ": expected " + std::to_string(mk.shape.n) +
              " objects");
    std::vector<int> order;
    std::vector<char> seen(mk.shape.n, 0);
    for (int k = 0; k < mk.shape.n; ++k) {
      auto [typ, owner] = parse_object(toks[2 + k], mk.shape, mk.type_names, at);
      if (typ != t) at.fail("object '" + toks[2 + k] + "' is not of type " + mk.type_names[t]);
      if (seen[owner]) at.fail("duplicate object '" + toks[2 + k] + "' in marginal");
      seen[owner] = 1;
      order.push_back(owner);
    }
    advance();
    return order;
  }

  std::vector<int> parse_ranking(const Market& mk) {
    expect_key("ranking");
    Loc at = loc();
    const auto& toks = cur().tokens;
    const int B = num_bundles(mk.shape);
    if ((int)toks.size() != 1 + B)
      at.fail("ranking: expected " + std::to_string(B) + " bundles, got " +
              std::to_string(toks.size() - 1));
    std::vector<int> order;
    std::vector<char> seen(B, 0);
    for (int k = 0; k < B; ++k) {
      int id = bundle_id(parse_bundle_text(toks[1 + k], mk.shape, mk.type_names, at), mk.shape);
      if (seen[id]) at.fail("duplicate bundle " + toks[1 + k] + " in ranking");
      seen[id] = 1;
      order.push_back(id);
    }
    advance();
    return order;
  }

  Pref parse_agent(const Market& mk, int idx) {
    expect_key("agent");
    if (parse_int(value_of("agent"), loc()) != idx + 1)
      loc().fail("expected 'agent " + std::to_string(idx + 1) + "'");
    advance();
    std::string kind = value_of("kind");
    Loc kind_at = loc();
    advance();

    if (kind == "strict") {
      return pref_from_order(parse_ranking(mk), mk.shape);
    }
    if (kind == "separable") {
      std::vector<std::vector<int>> margs;
      for (int t = 0; t < mk.shape.m; ++t) margs.push_back(parse_marginal(mk, t));
      Loc at = loc();
      Pref p = pref_from_order(parse_ranking(mk), mk.shape);
      try {
        make_separable(p, mk.shape);
      } catch (const std::exception& ex) {
        at.fail(ex.what());
      }
      if (p.marg_order != margs)
        at.fail("declared marginals disagree with the marginals induced by the ranking");
      return p;
    }
    if (kind == "lexicographic") {
      expect_key("importance");
      Loc at = loc();
      const auto& toks = cur().tokens;
      if ((int)toks.size() != 1 + mk.shape.m)
        at.fail("importance: expected " + std::to_string(mk.shape.m) + " type names");
      std::vector<int> pi;
      std::vector<char> seen(mk.shape.m, 0);
      for (int k = 0; k < mk.shape.m; ++k) {
        auto it = std::find(mk.type_names.begin(), mk.type_names.end(), toks[1 + k]);
        if (it == mk.type_names.end()) at.fail("unknown type name '" + toks[1 + k] + "'");
        int t = (int)(it - mk.type_names.begin());
        if (seen[t]) at.fail("duplicate type in importance");
        seen[t] = 1;
        pi.push_back(t);
      }
      advance();
      std::vector<std::vector<int>> margs;
      for (int t = 0; t < mk.shape.m; ++t) margs.push_back(parse_marginal(mk, t));
      return lexicographic_from(margs, pi, mk.shape);
    }
    kind_at.fail("unknown kind '" + kind + "' (expected strict, separable or lexicographic)");
  }
};

const char* kind_name(PrefKind k) {
  switch (k) {
    case PrefKind::strict: return "strict";
    case PrefKind::separable: return "separable";
    case PrefKind::lexicographic: return "lexicographic";
  }
  return "?";
}

Market parse_market_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("json: ") + ex.what());
  }
  Loc at{0};
  auto whitelist = [&](const nlohmann::json& obj, std::vector<std::string> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
        throw ParseError("json: unknown field '" + it.key() + "'");
  };
  try {
    whitelist(doc, {"schema_version", "n", "m", "types", "domain", "agents"});
    if (doc.at("schema_version").get<int>() != 1) throw ParseError("json: unsupported schema_version");
    Market mk;
    mk.shape.n = doc.at("n").get<int>();
    mk.shape.m = doc.at("m").get<int>();
    if (mk.shape.n < 2 || mk.shape.m < 1) throw ParseError("json: need n >= 2 and m >= 1");
    if (doc.contains("types"))
      mk.type_names = doc.at("types").get<std::vector<std::string>>();
    else
      mk.type_names = default_type_names(mk.shape.m);
    if ((int)mk.type_names.size() != mk.shape.m) throw ParseError("json: wrong type-name count");
    auto dom = domain_from_string(doc.at("domain").get<std::string>());
    if (!dom) throw ParseError("json: unknown domain");
    mk.domain = *dom;
    const auto& agents = doc.at("agents");
    if ((int)agents.size() != mk.shape.n) throw ParseError("json: expected one agent entry per agent");
    for (const auto& ag : agents) {
      std::string kind = ag.at("kind").get<std::string>();
      auto get_margs = [&]() {
        std::vector<std::vector<int>> margs(mk.shape.m);
        const auto& mj = ag.at("marginals");
        for (int t = 0; t < mk.shape.m; ++t) {
          auto labels = mj.at(mk.type_names[t]).get<std::vector<std::string>>();
          if ((int)labels.size() != mk.shape.n) throw ParseError("json: marginal length mismatch");
          std::vector<char> seen(mk.shape.n, 0);
          for (const std::string& lab : labels) {
            auto [typ, owner] = parse_object(lab, mk.shape, mk.type_names, at);
            if (typ != t || seen[owner]) throw ParseError("json: bad marginal entry '" + lab + "'");
            seen[owner] = 1;
            margs[t].push_back(owner);
          }
        }
        return margs;
      };
      auto get_ranking = [&]() {
        auto labels = ag.at("ranking").get<std::vector<std::string>>();
        std::vector<int> order;
        for (const std::string& lab : labels)
          order.push_back(bundle_id(parse_bundle_text(lab, mk.shape, mk.type_names, at), mk.shape));
        return pref_from_order(order, mk.shape);
      };
      if (kind == "strict") {
        whitelist(ag, {"kind", "ranking"});
        mk.prefs.push_back(get_ranking());
      } else if (kind == "separable") {
        whitelist(ag, {"kind", "marginals", "ranking"});
        auto margs = get_margs();
        Pref p = get_ranking();
        make_separable(p, mk.shape);
        if (p.marg_order != margs)
          throw ParseError("json: declared marginals disagree with the ranking");
        mk.prefs.push_back(std::move(p));
      } else if (kind == "lexicographic") {
        whitelist(ag, {"kind", "importance", "marginals"});
        auto pin = ag.at("importance").get<std::vector<std::string>>();
        std::vector<int> pi;
        for (const std::string& nm : pin) {
          auto it = std::find(mk.type_names.begin(), mk.type_names.end(), nm);
          if (it == mk.type_names.end()) throw ParseError("json: unknown type '" + nm + "'");
          pi.push_back((int)(it - mk.type_names.begin()));
        }
        mk.prefs.push_back(lexicographic_from(get_margs(), pi, mk.shape));
      } else {
        throw ParseError("json: unknown kind '" + kind + "'");
      }
    }
    check_market(mk);
    return mk;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ParseError(std::string("json: ") + ex.what());
  }
}

}  // namespace

Market parse_market(const std::string& text) {
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_market_json(text);
  return TextParser(text).run();
}

std::string serialize_market(const Market& mk) {
  check_market(mk);
  std::string out;
  out += "schema_version 1\n";
  out += "n " + std::to_string(mk.shape.n) + "\n";
  out += "m " + std::to_string(mk.shape.m) + "\n";
  out += "types";
  for (const std::string& nm : mk.type_names) out += " " + nm;
  out += "\ndomain " + std::string(to_string(mk.domain)) + "\n";
  for (int i = 0; i < mk.shape.n; ++i) {
    const Pref& p = mk.prefs[i];
    out += "agent " + std::to_string(i + 1) + "\n";
    out += "kind " + std::string(kind_name(p.kind)) + "\n";
    if (p.kind == PrefKind::lexicographic) {
      out += "importance";
      for (int t : p.importance) out += " " + mk.type_names[t];
      out += "\n";
    }
    if (p.kind != PrefKind::strict) {
      for (int t = 0; t < mk.shape.m; ++t) {
        out += "marginal " + mk.type_names[t] + ":";
        for (int w : p.marg_order[t]) out += " " + render_object(t, w, mk.type_names);
        out += "\n";
      }
    }
    if (p.kind != PrefKind::lexicographic) {
      out += "ranking";
      for (int b : p.order)
        out += " " + render_bundle(bundle_from_id(b, mk.shape), mk.type_names);
      out += "\n";
    }
  }
  return out;
}

std::string serialize_market_json(const Market& mk) {
  check_market(mk);
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["n"] = mk.shape.n;
  doc["m"] = mk.shape.m;
  doc["types"] = mk.type_names;
  doc["domain"] = to_string(mk.domain);
  doc["agents"] = nlohmann::ordered_json::array();
  for (const Pref& p : mk.prefs) {
    nlohmann::ordered_json ag;
    ag["kind"] = kind_name(p.kind);
    if (p.kind == PrefKind::lexicographic) {
      std::vector<std::string> pin;
      for (int t : p.importance) pin.push_back(mk.type_names[t]);
      ag["importance"] = pin;
    }
    if (p.kind != PrefKind::strict) {
      nlohmann::ordered_json mj;
      for (int t = 0; t < mk.shape.m; ++t) {
        std::vector<std::string> labels;
        for (int w : p.marg_order[t]) labels.push_back(render_object(t, w, mk.type_names));
        mj[mk.type_names[t]] = labels;
      }
      ag["marginals"] = mj;
    }
    if (p.kind != PrefKind::lexicographic) {
      std::vector<std::string> labels;
      for (int b : p.order) labels.push_back(render_bundle(bundle_from_id(b, mk.shape), mk.type_names));
      ag["ranking"] = labels;
    }
    doc["agents"].push_back(ag);
  }
  return doc.dump(2) + "\n";
}

Allocation parse_allocation(const std::string& text, const Shape& s,
                            const std::vector<std::string>& names) {
  Loc at{0};
  std::string trimmed;
  for (char c : text)
    if (!isspace((unsigned char)c)) trimmed += c;
  if (trimmed.size() < 2 || trimmed.front() != '(' || trimmed.back() != ')')
    throw ParseError("allocation '" + text + "': expected ((...),(...),...)");
  std::string inner = trimmed.substr(1, trimmed.size() - 2);
  Allocation a;
  size_t pos = 0;
  for (int i = 0; i < s.n; ++i) {
    if (i) {
      if (pos >= inner.size() || inner[pos] != ',')
        throw ParseError("allocation '" + text + "': expected " + std::to_string(s.n) + " bundles");
      ++pos;
    }
    size_t close = inner.find(')', pos);
    if (pos >= inner.size() || inner[pos] != '(' || close == std::string::npos)
      throw ParseError("allocation '" + text + "': expected " + std::to_string(s.n) + " bundles");
    a.owner.push_back(parse_bundle_text(inner.substr(pos, close - pos + 1), s, names, at));
    pos = close + 1;
  }
  if (pos != inner.size())
    throw ParseError("allocation '" + text + "': trailing content");
  try {
    check_allocation(a, s);
  } catch (const std::exception& ex) {
    throw ParseError(ex.what());
  }
  return a;
}

}  // namespace mtm
