#include <algorithm>
#include <cctype>
#include <sstream>

#include "polycomm/error.hpp"
#include "polycomm/iset.hpp"

namespace polycomm {

namespace {

enum class Tok { Int, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        if (v > (INT64_MAX - 9) / 10) throw Error(ErrorKind::ParseError, "integer literal too large at column " + std::to_string(start + 1));
        v = v * 10 + (s[i++] - '0');
      }
      out.push_back({Tok::Int, std::string(s.substr(start, i - start)), v, start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '.' || s[i] == '\''))
        ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), 0, start});
      continue;
    }
    static const char* two[] = {"->", "<=", ">=", "=="};
    bool matched = false;
    for (const char* t : two) {
      if (s.substr(i, 2) == t) {
        out.push_back({Tok::Punct, t, 0, start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("{}[]();:,+-*/<>=").find(c) == std::string_view::npos)
      throw Error(ErrorKind::ParseError, std::string("unexpected character '") + c + "' at column " +
                                             std::to_string(start + 1));
    out.push_back({Tok::Punct, std::string(1, c), 0, start});
    ++i;
  }
  out.push_back({Tok::End, "", 0, s.size()});
  return out;
}

// Parsed tuple entry: either a fresh dim name or an expression.
struct Entry {
  std::optional<std::string> name;
  std::vector<Token> tokens;
};

class Parser {
 public:
  Parser(std::string_view text, const Constants& constants) : toks_(lex(text)), constants_(constants) {}

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at(std::string_view p) const { return peek().kind != Tok::Int && peek().text == p; }
  bool accept(std::string_view p) {
    if (!at(p)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at column " + std::to_string(peek().pos + 1) +
                                           (peek().kind == Tok::End ? " (end of input)" : " near '" + peek().text + "'"));
  }
  bool done() const { return peek().kind == Tok::End; }

  std::string opt_name() {
    if (peek().kind == Tok::Ident && peek(1).text == "[") return toks_[pos_++].text;
    return "";
  }

  // Raw tuple entries; a single identifier that is not a constant and not in
  // `known` becomes a fresh dim.
  std::vector<Entry> tuple(const std::vector<std::string>& known) {
    expect("[");
    std::vector<Entry> out;
    if (accept("]")) return out;
    for (;;) {
      Entry e;
      int depth = 0;
      while (!(depth == 0 && (at(",") || at("]")))) {
        if (done()) fail("unterminated tuple");
        if (at("(")) ++depth;
        if (at(")")) --depth;
        e.tokens.push_back(toks_[pos_++]);
      }
      if (e.tokens.empty()) fail("empty tuple entry");
      if (e.tokens.size() == 1 && e.tokens[0].kind == Tok::Ident && !constants_.count(e.tokens[0].text) &&
          std::find(known.begin(), known.end(), e.tokens[0].text) == known.end())
        e.name = e.tokens[0].text;
      out.push_back(std::move(e));
      if (accept("]")) break;
      expect(",");
    }
    return out;
  }

  AffineExpr expr(const std::vector<std::string>& dims) {
    AffineExpr r = term(dims);
    for (;;) {
      if (accept("+"))
        r += term(dims);
      else if (accept("-"))
        r -= term(dims);
      else
        return r;
    }
  }

  AffineExpr term(const std::vector<std::string>& dims) {
    AffineExpr r = factor(dims);
    for (;;) {
      // implicit product: 2i, 3floor(...), 2(x+1)
      const bool implicit = r.is_constant() &&
                            (peek().kind == Tok::Ident || at("(")) && !at("and") && !at("or");
      if (accept("*") || implicit) {
        AffineExpr f = factor(dims);
        if (r.is_constant())
          r = r.constant * f;
        else if (f.is_constant())
          r = f.constant * r;
        else
          fail("non-affine product");
      } else {
        return r;
      }
    }
  }

  AffineExpr factor(const std::vector<std::string>& dims) {
    const std::size_t n = dims.size();
    if (accept("-")) return -factor(dims);
    if (accept("+")) return factor(dims);
    if (peek().kind == Tok::Int) return AffineExpr(n, toks_[pos_++].value);
    if (accept("(")) {
      AffineExpr e = expr(dims);
      expect(")");
      return e;
    }
    if (peek().kind == Tok::Ident) {
      const std::string name = toks_[pos_++].text;
      if (name == "floor") {
        expect("(");
        AffineExpr inner = expr(dims);
        expect("/");
        if (peek().kind != Tok::Int) fail("floor divisor must be a positive integer");
        const std::int64_t d = toks_[pos_++].value;
        if (d <= 0) fail("floor divisor must be positive");
        expect(")");
        AffineExpr r = floor_of(inner, d);
        if (r.floor_depth() > 2) fail("floor nesting deeper than 2");
        return r;
      }
      auto dim = std::find(dims.begin(), dims.end(), name);
      if (dim != dims.end()) return AffineExpr::var(n, static_cast<std::size_t>(dim - dims.begin()));
      if (auto c = constants_.find(name); c != constants_.end()) return AffineExpr(n, c->second);
      --pos_;
      fail("unknown identifier '" + name + "'");
    }
    fail("expected expression");
  }

  // Chained relations joined by 'and' (or ','), alternatives by 'or',
  // parenthesized groups allowed. Result is in disjunctive normal form.
  std::vector<Conjunction> condition(const std::vector<std::string>& dims) {
    std::vector<Conjunction> out;
    for (;;) {
      std::vector<Conjunction> conj{Conjunction{}};
      for (;;) {
        std::vector<Conjunction> atom = condition_atom(dims);
        std::vector<Conjunction> next;
        for (const auto& a : conj)
          for (const auto& b : atom) {
            Conjunction c = a;
            c.insert(c.end(), b.begin(), b.end());
            next.push_back(std::move(c));
          }
        conj = std::move(next);
        if (!accept("and") && !accept(",")) break;
      }
      for (auto& c : conj) out.push_back(std::move(c));
      if (!accept("or")) break;
    }
    return out;
  }

  std::vector<Conjunction> condition_atom(const std::vector<std::string>& dims) {
    if (accept("true")) return {Conjunction{}};
    if (accept("false")) return {};
    if (at("(")) {
      const std::size_t save = pos_;
      try {
        ++pos_;
        auto group = condition(dims);
        expect(")");
        return group;
      } catch (const Error&) {
        pos_ = save;  // an arithmetic parenthesis, e.g. (x + 1) <= 3
      }
    }
    Conjunction c;
    relation(dims, c);
    return {c};
  }

  void relation(const std::vector<std::string>& dims, Conjunction& out) {
    AffineExpr lhs = expr(dims);
    bool any = false;
    for (;;) {
      std::string op;
      for (const char* o : {"<=", ">=", "==", "<", ">", "="}) {
        if (accept(o)) {
          op = o;
          break;
        }
      }
      if (op.empty()) break;
      AffineExpr rhs = expr(dims);
      if (op == "<=")
        out.push_back({rhs - lhs, false});
      else if (op == "<")
        out.push_back({rhs - lhs - AffineExpr(dims.size(), 1), false});
      else if (op == ">=")
        out.push_back({lhs - rhs, false});
      else if (op == ">")
        out.push_back({lhs - rhs - AffineExpr(dims.size(), 1), false});
      else
        out.push_back({lhs - rhs, true});
      lhs = std::move(rhs);
      any = true;
    }
    if (!any) fail("expected relational operator");
  }

  AffineExpr entry_expr(const Entry& e, const std::vector<std::string>& dims) {
    Parser sub(toks_, constants_);
    sub.toks_ = e.tokens;
    sub.toks_.push_back({Tok::End, "", 0, e.tokens.back().pos + e.tokens.back().text.size()});
    AffineExpr r = sub.expr(dims);
    if (!sub.done()) sub.fail("trailing tokens in tuple entry");
    return r;
  }

  Parser(std::vector<Token> toks, const Constants& constants) : toks_(std::move(toks)), constants_(constants) {}

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Constants& constants_;
};

// Domain tuple: names become dims, expressions get a hidden dim plus an
// equality.
struct TupleDims {
  std::vector<std::string> dims;
  std::vector<std::pair<std::size_t, const Entry*>> pinned;
};

TupleDims name_entries(const std::vector<Entry>& entries, std::size_t offset) {
  TupleDims t;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].name && std::find(t.dims.begin(), t.dims.end(), *entries[k].name) == t.dims.end()) {
      t.dims.push_back(*entries[k].name);
    } else {
      t.dims.push_back("_" + std::to_string(offset + k));
      t.pinned.emplace_back(k, &entries[k]);
    }
  }
  return t;
}

Conjunction pin_constraints(Parser& p, const TupleDims& t, std::size_t offset, const std::vector<std::string>& all) {
  Conjunction c;
  for (const auto& [k, entry] : t.pinned) {
    AffineExpr e = p.entry_expr(*entry, all);
    c.push_back({AffineExpr::var(all.size(), offset + k) - e, true});
  }
  return c;
}

Conjunction concat(Conjunction a, const Conjunction& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

IntSet parse_set(std::string_view text, const Constants& constants) {
  Parser p(text, constants);
  p.expect("{");
  std::optional<Space> space;
  std::vector<Conjunction> pieces;
  while (!p.at("}")) {
    std::string name = p.opt_name();
    auto entries = p.tuple({});
    TupleDims t = name_entries(entries, 0);
    Conjunction pins = pin_constraints(p, t, 0, t.dims);
    std::vector<Conjunction> conds{Conjunction{}};
    if (p.accept(":")) conds = p.condition(t.dims);
    Space s(name, t.dims);
    if (space && !(*space == s)) p.fail("all parts of a set must share one space");
    if (!space) space = s;
    for (auto& c : conds) pieces.push_back(concat(pins, c));
    if (!p.accept(";")) break;
  }
  p.expect("}");
  if (!p.done()) p.fail("trailing input after set");
  if (!space) p.fail("a set needs at least one tuple");
  return IntSet(*space, std::move(pieces));
}

IntMap parse_map(std::string_view text, const Constants& constants) {
  Parser p(text, constants);
  p.expect("{");
  std::optional<Space> dom_space, ran_space;
  std::vector<MapPiece> pieces;
  std::vector<PointPair> pairs;
  while (!p.at("}")) {
    std::string dname = p.opt_name();
    auto dentries = p.tuple({});
    TupleDims dt = name_entries(dentries, 0);
    p.expect("->");
    std::string rname = p.opt_name();
    auto rentries = p.tuple(dt.dims);
    const std::size_t n = dt.dims.size();
    bool fresh = false;
    for (const auto& e : rentries) fresh |= e.name.has_value();
    std::vector<std::string> rdims;
    for (std::size_t k = 0; k < rentries.size(); ++k)
      rdims.push_back(rentries[k].name ? *rentries[k].name
                      : (rentries[k].tokens.size() == 1 && rentries[k].tokens[0].kind == Tok::Ident)
                          ? rentries[k].tokens[0].text
                          : "o" + std::to_string(k));
    Space ds(dname, dt.dims), rs(rname, rdims);
    if (dom_space && (!(*dom_space == ds) || !(*ran_space == rs))) p.fail("all parts of a map must share spaces");
    if (!dom_space) {
      dom_space = ds;
      ran_space = rs;
    }
    if (!fresh) {
      Conjunction pins = pin_constraints(p, dt, 0, dt.dims);
      std::vector<AffineExpr> outs;
      for (const auto& e : rentries) outs.push_back(p.entry_expr(e, dt.dims));
      std::vector<Conjunction> conds{Conjunction{}};
      if (p.accept(":")) conds = p.condition(dt.dims);
      for (auto& c : conds) pieces.push_back({concat(pins, c), outs});
    } else {
      // Outputs constrained only by the condition: enumerate the joint space.
      TupleDims rt = name_entries(rentries, n);
      std::vector<std::string> all = dt.dims;
      all.insert(all.end(), rt.dims.begin(), rt.dims.end());
      Conjunction pins = concat(pin_constraints(p, dt, 0, all), pin_constraints(p, rt, n, all));
      std::vector<Conjunction> conds{Conjunction{}};
      if (p.accept(":")) conds = p.condition(all);
      std::vector<Conjunction> joint;
      for (auto& c : conds) joint.push_back(concat(pins, c));
      for (const auto& pt : IntSet(Space::anonymous(all.size()), joint).enumerate())
        pairs.emplace_back(Point(pt.begin(), pt.begin() + n), Point(pt.begin() + n, pt.end()));
    }
    if (!p.accept(";")) break;
  }
  p.expect("}");
  if (!p.done()) p.fail("trailing input after map");
  if (!dom_space) p.fail("a map needs at least one tuple pair");
  IntMap m(*dom_space, *ran_space, std::move(pieces));
  if (!pairs.empty()) m = unite(m, IntMap::from_pairs(*dom_space, *ran_space, std::move(pairs)));
  return m;
}

AffineExpr parse_affine(std::string_view text, const std::vector<std::string>& dims, const Constants& constants) {
  Parser p(text, constants);
  AffineExpr e = p.expr(dims);
  if (!p.done()) p.fail("trailing input after expression");
  return e;
}

// ---- printing -------------------------------------------------------------

namespace {

void append_term(std::string& out, std::int64_t c, const std::string& atom) {
  if (c == 0) return;
  if (out.empty()) {
    if (c == -1)
      out += "-";
    else if (c != 1)
      out += std::to_string(c) + "*";
  } else {
    out += c < 0 ? " - " : " + ";
    const std::int64_t a = c < 0 ? -c : c;
    if (a != 1) out += std::to_string(a) + "*";
  }
  out += atom;
}

void append_constant(std::string& out, std::int64_t c) {
  if (out.empty()) {
    out = std::to_string(c);
  } else if (c != 0) {
    out += c < 0 ? " - " : " + ";
    out += std::to_string(c < 0 ? -c : c);
  }
}

std::string floor_atom(const FloorTerm& f, const std::vector<std::string>& dims) {
  const std::string inner = to_string(f.inner, dims);
  const bool simple = inner.find(' ') == std::string::npos;
  return "floor(" + (simple ? inner : "(" + inner + ")") + "/" + std::to_string(f.divisor) + ")";
}

std::string dim_name(const std::vector<std::string>& dims, std::size_t k) {
  return k < dims.size() ? dims[k] : "i" + std::to_string(k);
}

// Splits e into (positive part, negated negative part) for `lhs op rhs`.
std::pair<std::string, std::string> sides(const AffineExpr& e, const std::vector<std::string>& dims) {
  std::string lhs, rhs;
  for (std::size_t k = 0; k < e.coeffs.size(); ++k) {
    if (e.coeffs[k] > 0) append_term(lhs, e.coeffs[k], dim_name(dims, k));
    if (e.coeffs[k] < 0) append_term(rhs, -e.coeffs[k], dim_name(dims, k));
  }
  for (const auto& f : e.floors) {
    if (f.coeff > 0) append_term(lhs, f.coeff, floor_atom(f, dims));
    if (f.coeff < 0) append_term(rhs, -f.coeff, floor_atom(f, dims));
  }
  if (e.constant > 0) append_constant(lhs, e.constant);
  if (e.constant < 0) append_constant(rhs, -e.constant);
  if (lhs.empty()) lhs = "0";
  if (rhs.empty()) rhs = "0";
  return {lhs, rhs};
}

// Unit bound on one dim: returns (dim, is_lower, bound).
std::optional<std::tuple<std::size_t, bool, std::int64_t>> unit_bound(const Constraint& c) {
  if (c.equality || c.expr.has_floor()) return std::nullopt;
  std::optional<std::size_t> dim;
  for (std::size_t k = 0; k < c.expr.coeffs.size(); ++k) {
    if (c.expr.coeffs[k] == 0) continue;
    if (dim || (c.expr.coeffs[k] != 1 && c.expr.coeffs[k] != -1)) return std::nullopt;
    dim = k;
  }
  if (!dim) return std::nullopt;
  if (c.expr.coeffs[*dim] == 1) return std::tuple{*dim, true, -c.expr.constant};
  return std::tuple{*dim, false, c.expr.constant};
}

}  // namespace

std::string to_string(const AffineExpr& e, const std::vector<std::string>& dims) {
  std::string out;
  for (std::size_t k = 0; k < e.coeffs.size(); ++k) append_term(out, e.coeffs[k], dim_name(dims, k));
  for (const auto& f : e.floors) append_term(out, f.coeff, floor_atom(f, dims));
  append_constant(out, e.constant);
  return out;
}

std::string to_string(const Conjunction& c, const std::vector<std::string>& dims) {
  if (c.empty()) return "true";
  const std::size_t n = c.front().expr.arity();
  std::vector<std::optional<std::int64_t>> lo(n), hi(n);
  std::vector<const Constraint*> rest;
  for (const auto& con : c) {
    auto b = unit_bound(con);
    if (!b) {
      rest.push_back(&con);
      continue;
    }
    auto [k, lower, v] = *b;
    auto& slot = lower ? lo[k] : hi[k];
    slot = slot ? (lower ? std::max(*slot, v) : std::min(*slot, v)) : v;
  }
  std::vector<std::string> parts;
  for (const Constraint* con : rest) {
    if (!con->equality) continue;
    auto [l, r] = sides(con->expr, dims);
    parts.push_back(l + " = " + r);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::string name = dim_name(dims, k);
    if (lo[k] && hi[k])
      parts.push_back(std::to_string(*lo[k]) + " <= " + name + " <= " + std::to_string(*hi[k]));
    else if (lo[k])
      parts.push_back(name + " >= " + std::to_string(*lo[k]));
    else if (hi[k])
      parts.push_back(name + " <= " + std::to_string(*hi[k]));
  }
  for (const Constraint* con : rest) {
    if (con->equality) continue;
    auto [l, r] = sides(con->expr, dims);
    parts.push_back(l + " >= " + r);
  }
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? " and " : "") + parts[k];
  return out;
}

namespace {

std::string tuple_text(const Space& s) {
  std::string out = s.name + "[";
  for (std::size_t k = 0; k < s.dims.size(); ++k) out += (k ? "," : "") + s.dims[k];
  return out + "]";
}

std::string disjunction(const std::vector<const Conjunction*>& cs, const std::vector<std::string>& dims) {
  if (cs.empty()) return "false";
  std::string out;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const std::string c = to_string(*cs[k], dims);
    out += (k ? " or " : "") + (cs.size() > 1 && c.find(" and ") != std::string::npos ? "(" + c + ")" : c);
  }
  return out;
}

}  // namespace

std::string to_string(const IntSet& s) {
  std::vector<const Conjunction*> cs;
  bool universe = false;
  for (const auto& p : s.pieces()) {
    if (p.empty()) universe = true;
    cs.push_back(&p);
  }
  std::string out = "{ " + tuple_text(s.space());
  if (!universe) out += " : " + disjunction(cs, s.space().dims);
  return out + " }";
}

std::string to_string(const IntMap& m) {
  // Group pieces sharing outputs.
  std::vector<std::pair<const std::vector<AffineExpr>*, std::vector<const Conjunction*>>> groups;
  for (const auto& p : m.pieces()) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return *g.first == p.outputs; });
    if (it == groups.end()) {
      groups.push_back({&p.outputs, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&p.guard);
  }
  const auto& dims = m.domain_space().dims;
  std::string out = "{ ";
  if (groups.empty()) {
    out += tuple_text(m.domain_space()) + " -> " + tuple_text(m.range_space()) + " : false";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g) out += "; ";
    out += tuple_text(m.domain_space()) + " -> " + m.range_space().name + "[";
    const auto& outs = *groups[g].first;
    for (std::size_t k = 0; k < outs.size(); ++k) out += (k ? ", " : "") + to_string(outs[k], dims);
    out += "]";
    bool universe = std::any_of(groups[g].second.begin(), groups[g].second.end(),
                                [](const Conjunction* c) { return c->empty(); });
    if (!universe) out += " : " + disjunction(groups[g].second, dims);
  }
  return out + " }";
}

std::string to_string(std::span<const std::int64_t> p) {
  std::string out = "(";
  for (std::size_t k = 0; k < p.size(); ++k) out += (k ? "," : "") + std::to_string(p[k]);
  return out + ")";
}

}  // namespace polycomm
