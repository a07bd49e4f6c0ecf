#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polycomm/error.hpp"
#include "polycomm/scop.hpp"

namespace polycomm {

using json = nlohmann::ordered_json;

Box FieldDecl::index_box() const {
  Box b{Point(extents.size(), 0), Point(extents.size(), 0)};
  for (std::size_t k = 0; k < extents.size(); ++k) b.hi[k] = extents[k] - 1;
  return b;
}

IntSet FieldDecl::indexset() const {
  std::vector<std::string> dims;
  for (std::size_t k = 0; k < extents.size(); ++k) dims.push_back("k" + std::to_string(k));
  return IntSet::box(Space(name, dims), index_box());
}

Point AccessRef::element(std::span<const std::int64_t> instance) const {
  Point p;
  p.reserve(index.size());
  for (const auto& e : index) p.push_back(e.eval(instance));
  return p;
}

std::vector<std::int64_t> Statement::time(std::span<const std::int64_t> instance) const {
  auto img = schedule.image(instance);
  if (img.size() != 1)
    throw Error(ErrorKind::ValidationError, "schedule of " + id + " is not single-valued at " + to_string(instance));
  return img.front();
}

std::optional<std::size_t> Statement::write_access() const {
  for (std::size_t k = 0; k < accesses.size(); ++k)
    if (accesses[k].kind == AccessKind::Write) return k;
  return std::nullopt;
}

const FieldDecl& Scop::field(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return f;
  throw Error(ErrorKind::ValidationError, "unknown field '" + std::string(name) + "'");
}

const Statement& Scop::statement(std::string_view id) const { return statements[statement_index(id)]; }

std::size_t Scop::statement_index(std::string_view id) const {
  for (std::size_t k = 0; k < statements.size(); ++k)
    if (statements[k].id == id) return k;
  throw Error(ErrorKind::ValidationError, "unknown statement '" + std::string(id) + "'");
}

namespace {

void collect_scalars(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Expr::Op::Scalar) out.push_back(e.name);
  for (const auto& a : e.args) collect_scalars(a, out);
}

void collect_accesses(const Expr& e, std::vector<std::size_t>& out) {
  if (e.op == Expr::Op::Access) out.push_back(e.index);
  for (const auto& a : e.args) collect_accesses(a, out);
}

void collect_calls(const Expr& e, std::vector<const Expr*>& out) {
  if (e.op == Expr::Op::Call) out.push_back(&e);
  for (const auto& a : e.args) collect_calls(a, out);
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ValidationError, msg); }

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

std::int64_t json_int(const json& j, const Constants& constants, const std::string& what) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) {
    auto it = constants.find(j.get<std::string>());
    if (it == constants.end()) invalid(what + ": unknown constant '" + j.get<std::string>() + "'");
    return it->second;
  }
  invalid(what + ": expected an integer or a constant name");
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where + ": missing key '" + key + "'");
  return j.at(key);
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) invalid(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

// Line/column for a byte offset, for JSON syntax errors.
std::string location(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void derive_scalars(Statement& s) {
  s.scalar_reads.clear();
  s.scalar_writes.clear();
  std::set<std::string> assigned;
  for (const auto& a : s.body) {
    std::vector<std::string> used;
    collect_scalars(a.value, used);
    for (const auto& u : used)
      if (!assigned.count(u)) push_unique(s.scalar_reads, u);
    if (a.kind == Action::Kind::Let) {
      assigned.insert(a.target);
      push_unique(s.scalar_writes, a.target);
    }
  }
}

Scop parse_scop(std::string_view text, const Constants& overrides) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "JSON syntax error at " + location(text, e.byte ? e.byte - 1 : 0) + ": " +
                                           std::string(e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "top level must be a JSON object");

  Scop s;
  try {
    if (doc.contains("constants")) {
      for (const auto& [k, v] : doc["constants"].items()) {
        if (!v.is_number_integer()) invalid("constant '" + k + "' must be an integer");
        s.constants[k] = v.get<std::int64_t>();
      }
    }
    for (const auto& [k, v] : overrides) s.constants[k] = v;

    for (const auto& f : require(doc, "fields", "document")) {
      FieldDecl d;
      d.name = require_string(f, "name", "field");
      const std::string type = f.value("type", "bool");
      if (type == "bool")
        d.type = ElemType::Bool;
      else if (type == "int64")
        d.type = ElemType::Int64;
      else if (type == "float64")
        d.type = ElemType::Float64;
      else
        invalid("field " + d.name + ": unknown element type '" + type + "'");
      for (const auto& e : require(f, "extents", "field " + d.name))
        d.extents.push_back(json_int(e, s.constants, "field " + d.name));
      s.fields.push_back(std::move(d));
    }
    for (const auto& g : require(doc, "grid", "document")) s.grid.push_back(json_int(g, s.constants, "grid"));
    s.scatter_arity = static_cast<std::size_t>(json_int(require(doc, "scatter_arity", "document"), s.constants,
                                                        "scatter_arity"));
    if (doc.contains("functions")) {
      for (const auto& f : doc["functions"]) {
        Function fn;
        fn.name = require_string(f, "name", "function");
        for (const auto& p : require(f, "params", "function " + fn.name)) fn.params.push_back(p.get<std::string>());
        fn.body = parse_expr(require_string(f, "body", "function " + fn.name), fn.params);
        if (s.functions.count(fn.name)) invalid("duplicate function '" + fn.name + "'");
        s.functions[fn.name] = std::move(fn);
      }
    }
    for (const auto& js : require(doc, "statements", "document")) {
      Statement st;
      st.id = require_string(js, "id", "statement");
      const std::string where = "statement " + st.id;
      IntSet dom = parse_set(require_string(js, "domain", where), s.constants);
      if (!dom.space().name.empty() && dom.space().name != st.id)
        invalid(where + ": domain tuple is named '" + dom.space().name + "'");
      st.domain = dom.with_space(Space(st.id, dom.space().dims));
      IntMap sched = parse_map(require_string(js, "schedule", where), s.constants);
      if (sched.domain_space().arity() != st.domain.arity())
        invalid(where + ": schedule arity differs from the domain");
      st.schedule = sched.with_spaces(st.domain.space(), Space::anonymous(sched.range_space().arity()));
      if (js.contains("accesses")) {
        for (const auto& ja : js["accesses"]) {
          AccessRef a;
          a.field = require_string(ja, "field", where);
          const std::string kind = ja.value("kind", "read");
          if (kind == "read")
            a.kind = AccessKind::Read;
          else if (kind == "write")
            a.kind = AccessKind::Write;
          else
            invalid(where + ": access kind must be read or write");
          for (const auto& ix : require(ja, "index", where))
            a.index.push_back(parse_affine(ix.get<std::string>(), st.domain.space().dims, s.constants));
          st.accesses.push_back(std::move(a));
        }
      }
      st.body = parse_body(js.value("body", ""));
      derive_scalars(st);
      s.statements.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("schema: ") + e.what());
  }
  validate(s);
  return s;
}

Scop load_scop(const std::string& path, const Constants& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scop(ss.str(), overrides);
}

void validate(const Scop& s) {
  std::set<std::string> names;
  for (const auto& f : s.fields) {
    if (!names.insert(f.name).second) invalid("duplicate field '" + f.name + "'");
    for (auto e : f.extents)
      if (e < 1) invalid("field " + f.name + ": extents must be >= 1");
  }
  if (s.grid.empty()) invalid("grid needs at least one dimension");
  for (auto g : s.grid)
    if (g < 1) invalid("grid extents must be >= 1");

  // Function bodies: params, constants and calls only; no recursion.
  for (const auto& [name, fn] : s.functions) {
    std::vector<std::string> sc;
    collect_scalars(fn.body, sc);
    if (!sc.empty()) invalid("function " + name + " references unknown name '" + sc.front() + "'");
    std::vector<std::size_t> acc;
    collect_accesses(fn.body, acc);
    if (!acc.empty()) invalid("function " + name + " reads a field access");
  }
  std::function<void(const std::string&, std::vector<std::string>&)> visit = [&](const std::string& name,
                                                                                  std::vector<std::string>& stack) {
    if (std::find(stack.begin(), stack.end(), name) != stack.end()) invalid("function " + name + " is recursive");
    stack.push_back(name);
    std::vector<const Expr*> calls;
    collect_calls(s.functions.at(name).body, calls);
    for (const Expr* c : calls) {
      auto it = s.functions.find(c->name);
      if (it == s.functions.end()) invalid("function " + name + " calls unknown '" + c->name + "'");
      if (it->second.params.size() != c->args.size()) invalid("wrong argument count calling '" + c->name + "'");
      visit(c->name, stack);
    }
    stack.pop_back();
  };
  for (const auto& [name, fn] : s.functions) {
    std::vector<std::string> stack;
    visit(name, stack);
  }

  std::set<std::string> ids, declared;
  for (const auto& st : s.statements)
    for (const auto& w : st.scalar_writes) declared.insert(w);
  std::vector<std::pair<Point, std::string>> times;
  for (const auto& st : s.statements) {
    const std::string where = "statement " + st.id;
    if (!ids.insert(st.id).second) invalid("duplicate statement id '" + st.id + "'");
    if (st.role == Statement::Role::Normal && (st.id == "Prologue" || st.id == "Epilogue"))
      invalid("statement id '" + st.id + "' is reserved");
    if (st.schedule.range_space().arity() != s.scatter_arity)
      invalid(where + ": schedule has " + std::to_string(st.schedule.range_space().arity()) +
              " outputs, scatter_arity is " + std::to_string(s.scatter_arity));
    for (const auto& a : st.accesses) {
      const FieldDecl& f = s.field(a.field);
      if (a.index.size() != f.arity()) invalid(where + ": access to " + a.field + " has wrong index count");
      for (const auto& e : a.index)
        if (e.has_floor()) invalid(where + ": access index must be affine without floor");
    }
    std::vector<bool> used(st.accesses.size(), false);
    for (const auto& act : st.body) {
      std::vector<std::size_t> reads;
      collect_accesses(act.value, reads);
      for (auto k : reads) {
        if (k >= st.accesses.size()) invalid(where + ": body references @" + std::to_string(k));
        if (st.accesses[k].kind != AccessKind::Read) invalid(where + ": @" + std::to_string(k) + " is not a read");
        used[k] = true;
      }
      if (act.kind == Action::Kind::Store) {
        if (act.access >= st.accesses.size()) invalid(where + ": store to @" + std::to_string(act.access));
        if (st.accesses[act.access].kind != AccessKind::Write)
          invalid(where + ": store target @" + std::to_string(act.access) + " is not a write access");
        used[act.access] = true;
      }
      std::vector<std::string> sc;
      collect_scalars(act.value, sc);
      for (const auto& n : sc)
        if (!declared.count(n)) invalid(where + ": scalar '" + n + "' is never assigned");
      std::vector<const Expr*> calls;
      collect_calls(act.value, calls);
      for (const Expr* c : calls) {
        auto it = s.functions.find(c->name);
        if (it == s.functions.end()) invalid(where + ": unknown function '" + c->name + "'");
        if (it->second.params.size() != c->args.size()) invalid(where + ": wrong argument count for " + c->name);
      }
    }
    for (std::size_t k = 0; k < used.size(); ++k)
      if (!used[k]) invalid(where + ": access @" + std::to_string(k) + " is unused by the body");

    for (const auto& p : st.domain.enumerate()) {
      auto img = st.schedule.image(p);
      if (img.size() != 1) invalid(where + ": schedule is not single-valued at " + to_string(p));
      times.emplace_back(img.front(), st.id);
      for (const auto& a : st.accesses) {
        Point e = a.element(p);
        if (!s.field(a.field).index_box().contains(e))
          invalid(where + ": access " + a.field + to_string(e) + " out of bounds at instance " + to_string(p));
      }
    }
  }
  std::sort(times.begin(), times.end());
  for (std::size_t k = 1; k < times.size(); ++k)
    if (times[k].first == times[k - 1].first)
      invalid("schedule is not injective: " + times[k - 1].second + " and " + times[k].second + " both at " +
              to_string(times[k].first));
}

std::string print_scop(const Scop& s) {
  json doc;
  json constants = json::object();
  for (const auto& [k, v] : s.constants) constants[k] = v;
  doc["constants"] = constants;
  json fields = json::array();
  for (const auto& f : s.fields) fields.push_back({{"name", f.name}, {"type", to_string(f.type)}, {"extents", f.extents}});
  doc["fields"] = fields;
  doc["grid"] = s.grid;
  doc["scatter_arity"] = s.scatter_arity;
  json functions = json::array();
  for (const auto& [name, fn] : s.functions)
    functions.push_back({{"name", name}, {"params", fn.params}, {"body", to_string(fn.body)}});
  doc["functions"] = functions;
  json statements = json::array();
  for (const auto& st : s.statements) {
    json accesses = json::array();
    for (const auto& a : st.accesses) {
      json index = json::array();
      for (const auto& e : a.index) index.push_back(to_string(e, st.domain.space().dims));
      accesses.push_back({{"field", a.field}, {"index", index}, {"kind", a.kind == AccessKind::Read ? "read" : "write"}});
    }
    statements.push_back({{"id", st.id},
                          {"domain", to_string(st.domain)},
                          {"schedule", to_string(st.schedule)},
                          {"accesses", accesses},
                          {"body", body_text(st.body)}});
  }
  doc["statements"] = statements;
  return doc.dump(2) + "\n";
}

}  // namespace polycomm
