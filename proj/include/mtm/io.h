#pragma once

// Market file format (key-value text, JSON auto-detected), allocation
// rendering, and parsing helpers. Serialization is canonical: for any market M,
// parse(serialize(M)) == M and serialize(parse(serialize(M))) is byte-identical.

#include <string>
#include <vector>

#include "mtm/core.h"

namespace mtm {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text format documented in docs/market-format.md. Input starting with '{'
// is parsed as the JSON form instead.
Market parse_market(const std::string& text);
std::string serialize_market(const Market& mk);
std::string serialize_market_json(const Market& mk);

// "H2" for (type 0, owner 1) with type_names = {H, C}
std::string render_object(int type, int owner, const std::vector<std::string>& names);
std::string render_bundle(const Bundle& b, const std::vector<std::string>& names);
// "((H2,C2),(H1,C1),(H3,C3))"
std::string render_allocation(const Allocation& a, const Shape& s,
                              const std::vector<std::string>& names);
Allocation parse_allocation(const std::string& text, const Shape& s,
                            const std::vector<std::string>& names);

}  // namespace mtm
