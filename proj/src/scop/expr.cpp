#include <cctype>
#include <charconv>
#include <functional>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "polycomm/error.hpp"
#include "polycomm/scop.hpp"

namespace polycomm {

namespace {

struct OpName {
  const char* text;
  Expr::Op op;
};

constexpr OpName kOps[] = {
    {"+", Expr::Op::Add},  {"-", Expr::Op::Sub},   {"*", Expr::Op::Mul},  {"/", Expr::Op::Div},
    {"%", Expr::Op::Mod},  {"and", Expr::Op::And}, {"or", Expr::Op::Or},  {"not", Expr::Op::Not},
    {"==", Expr::Op::Eq},  {"!=", Expr::Op::Ne},   {"<", Expr::Op::Lt},   {"<=", Expr::Op::Le},
    {">", Expr::Op::Gt},   {">=", Expr::Op::Ge},   {"ite", Expr::Op::Ite},
};

const char* op_text(Expr::Op op) {
  if (op == Expr::Op::Neg) return "-";
  for (const auto& o : kOps)
    if (o.op == op) return o.text;
  return "?";
}

class SexprParser {
 public:
  SexprParser(std::string_view text, const std::vector<std::string>& params) : s_(text), params_(params) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, "expression: " + msg + " at column " + std::to_string(i_ + 1) + " in '" +
                                           std::string(s_) + "'");
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool done() {
    skip();
    return i_ >= s_.size();
  }
  bool at(char c) {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }

  std::string atom() {
    skip();
    const std::size_t start = i_;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')')
      ++i_;
    if (i_ == start) fail("expected atom");
    return std::string(s_.substr(start, i_ - start));
  }

  Expr expr() {
    if (!at('(')) return leaf(atom());
    ++i_;
    const std::string head = atom();
    std::vector<Expr> args;
    while (!at(')')) {
      if (done()) fail("missing ')'");
      args.push_back(expr());
    }
    ++i_;
    for (const auto& o : kOps) {
      if (head != o.text) continue;
      Expr::Op op = o.op;
      if (op == Expr::Op::Sub && args.size() == 1) op = Expr::Op::Neg;
      check_arity(op, args.size());
      return Expr::node(op, std::move(args));
    }
    Expr call = Expr::node(Expr::Op::Call, {});
    if (head == "call") {
      if (args.empty() || args.front().op != Expr::Op::Scalar) fail("call needs a function name");
      call.name = args.front().name;
      args.erase(args.begin());
    } else {
      if (!is_ident(head)) fail("unknown operator '" + head + "'");
      call.name = head;
    }
    call.args = std::move(args);
    return call;
  }

  void check_arity(Expr::Op op, std::size_t n) const {
    using O = Expr::Op;
    bool ok = true;
    switch (op) {
      case O::Not:
      case O::Neg: ok = n == 1; break;
      case O::Add:
      case O::Mul:
      case O::And:
      case O::Or: ok = n >= 2; break;
      case O::Ite: ok = n == 3; break;
      default: ok = n == 2;
    }
    if (!ok) fail(std::string("wrong operand count for '") + op_text(op) + "'");
  }

  static bool is_ident(const std::string& a) {
    if (a.empty() || !(std::isalpha(static_cast<unsigned char>(a[0])) || a[0] == '_')) return false;
    for (char c : a)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
  }

  Expr leaf(const std::string& a) {
    if (a == "true") return Expr::constant(true);
    if (a == "false") return Expr::constant(false);
    if (a[0] == '@') {
      std::size_t k = 0;
      auto [p, ec] = std::from_chars(a.data() + 1, a.data() + a.size(), k);
      if (ec != std::errc() || p != a.data() + a.size() || a.size() == 1) fail("bad access reference '" + a + "'");
      return Expr::access(k);
    }
    if (std::isdigit(static_cast<unsigned char>(a[0])) || ((a[0] == '-' || a[0] == '+') && a.size() > 1)) {
      if (a.find_first_of(".eE") != std::string::npos) {
        char* end = nullptr;
        double d = std::strtod(a.c_str(), &end);
        if (end != a.c_str() + a.size()) fail("bad number '" + a + "'");
        return Expr::constant(d);
      }
      std::int64_t v = 0;
      const char* b = a.data() + (a[0] == '+' ? 1 : 0);
      auto [p, ec] = std::from_chars(b, a.data() + a.size(), v);
      if (ec != std::errc() || p != a.data() + a.size()) fail("bad integer '" + a + "'");
      return Expr::constant(v);
    }
    if (!is_ident(a)) fail("bad atom '" + a + "'");
    for (std::size_t k = 0; k < params_.size(); ++k) {
      if (params_[k] == a) {
        Expr e;
        e.op = Expr::Op::Param;
        e.name = a;
        e.index = k;
        return e;
      }
    }
    return Expr::scalar(a);
  }

  std::string_view s_;
  std::size_t i_ = 0;
  const std::vector<std::string>& params_;
};

[[noreturn]] void eval_fail(const std::string& msg) { throw Error(ErrorKind::EvaluationError, msg); }

bool is_double(const Value& v) { return std::holds_alternative<double>(v); }

std::int64_t as_int(const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? 1 : 0;
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  eval_fail("expected an integer, got " + value_text(v));
}

double as_double(const Value& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  return static_cast<double>(as_int(v));
}

bool as_bool(const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b;
  eval_fail("expected a bool, got " + value_text(v));
}

Value arith(Expr::Op op, const Value& a, const Value& b) {
  using O = Expr::Op;
  if (is_double(a) || is_double(b)) {
    const double x = as_double(a), y = as_double(b);
    switch (op) {
      case O::Add: return x + y;
      case O::Sub: return x - y;
      case O::Mul: return x * y;
      case O::Div: return x / y;
      default: eval_fail("'%' needs integer operands");
    }
  }
  const std::int64_t x = as_int(a), y = as_int(b);
  switch (op) {
    case O::Add: return x + y;
    case O::Sub: return x - y;
    case O::Mul: return x * y;
    case O::Div:
      if (y == 0) eval_fail("integer division by zero");
      return x / y;
    case O::Mod:
      if (y == 0) eval_fail("integer modulo by zero");
      return x % y;
    default: return std::int64_t{0};
  }
}

bool compare(Expr::Op op, const Value& a, const Value& b) {
  using O = Expr::Op;
  if (is_double(a) || is_double(b)) {
    const double x = as_double(a), y = as_double(b);
    switch (op) {
      case O::Eq: return x == y;
      case O::Ne: return x != y;
      case O::Lt: return x < y;
      case O::Le: return x <= y;
      case O::Gt: return x > y;
      default: return x >= y;
    }
  }
  const std::int64_t x = as_int(a), y = as_int(b);
  switch (op) {
    case O::Eq: return x == y;
    case O::Ne: return x != y;
    case O::Lt: return x < y;
    case O::Le: return x <= y;
    case O::Gt: return x > y;
    default: return x >= y;
  }
}

}  // namespace

const char* to_string(ElemType t) {
  switch (t) {
    case ElemType::Bool: return "bool";
    case ElemType::Int64: return "int64";
    case ElemType::Float64: return "float64";
  }
  return "?";
}

std::string value_text(const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
  return buf;
}

bool bit_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (auto x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return std::memcmp(x, &y, sizeof y) == 0;
  }
  return a == b;
}

Expr Expr::constant(Value v) {
  Expr e;
  e.op = Op::Const;
  e.value = v;
  return e;
}

Expr Expr::scalar(std::string n) {
  Expr e;
  e.op = Op::Scalar;
  e.name = std::move(n);
  return e;
}

Expr Expr::access(std::size_t k) {
  Expr e;
  e.op = Op::Access;
  e.index = k;
  return e;
}

Expr Expr::node(Op op, std::vector<Expr> args) {
  Expr e;
  e.op = op;
  e.args = std::move(args);
  return e;
}

bool Expr::operator==(const Expr& o) const {
  return op == o.op && bit_equal(value, o.value) && name == o.name && index == o.index && args == o.args;
}

Expr parse_expr(std::string_view text, const std::vector<std::string>& params) {
  SexprParser p(text, params);
  Expr e = p.expr();
  if (!p.done()) p.fail("trailing input");
  return e;
}

std::vector<Action> parse_body(std::string_view text) {
  static const std::vector<std::string> none;
  SexprParser p(text, none);
  std::vector<Action> out;
  while (!p.done()) {
    if (!p.at('(')) p.fail("expected '(let ...)' or '(store ...)'");
    ++p.i_;
    const std::string head = p.atom();
    Action a;
    if (head == "let") {
      a.kind = Action::Kind::Let;
      a.target = p.atom();
      if (!SexprParser::is_ident(a.target)) p.fail("bad scalar name '" + a.target + "'");
    } else if (head == "store") {
      a.kind = Action::Kind::Store;
      Expr ref = p.leaf(p.atom());
      if (ref.op != Expr::Op::Access) p.fail("store target must be an access '@K'");
      a.access = ref.index;
    } else {
      p.fail("unknown body form '" + head + "'");
    }
    a.value = p.expr();
    if (!p.at(')')) p.fail("expected ')'");
    ++p.i_;
    out.push_back(std::move(a));
  }
  return out;
}

std::string to_string(const Expr& e) {
  using O = Expr::Op;
  switch (e.op) {
    case O::Const:
      if (auto b = std::get_if<bool>(&e.value)) return *b ? "true" : "false";
      if (auto d = std::get_if<double>(&e.value)) {
        std::string t = value_text(*d);
        if (t.find_first_of(".eEn") == std::string::npos) t += ".0";
        return t;
      }
      return value_text(e.value);
    case O::Scalar:
    case O::Param: return e.name;
    case O::Access: return "@" + std::to_string(e.index);
    default: break;
  }
  std::string out = "(" + std::string(e.op == O::Call ? e.name.c_str() : op_text(e.op));
  for (const auto& a : e.args) out += " " + to_string(a);
  return out + ")";
}

std::string body_text(const std::vector<Action>& body) {
  std::string out;
  for (const auto& a : body) {
    if (!out.empty()) out += " ";
    if (a.kind == Action::Kind::Let)
      out += "(let " + a.target + " " + to_string(a.value) + ")";
    else
      out += "(store @" + std::to_string(a.access) + " " + to_string(a.value) + ")";
  }
  return out;
}

Value evaluate(const Expr& e, const Scop& scop, const ScalarEnv& scalars,
               const std::function<Value(std::size_t)>& read, std::span<const Value> params) {
  using O = Expr::Op;
  auto sub = [&](std::size_t k) { return evaluate(e.args[k], scop, scalars, read, params); };
  switch (e.op) {
    case O::Const: return e.value;
    case O::Scalar: {
      auto it = scalars.find(e.name);
      if (it == scalars.end()) eval_fail("scalar '" + e.name + "' read before assignment");
      return it->second;
    }
    case O::Param:
      if (e.index >= params.size()) eval_fail("parameter '" + e.name + "' out of range");
      return params[e.index];
    case O::Access: return read(e.index);
    case O::Call: {
      auto it = scop.functions.find(e.name);
      if (it == scop.functions.end()) eval_fail("unknown function '" + e.name + "'");
      if (it->second.params.size() != e.args.size()) eval_fail("wrong argument count for '" + e.name + "'");
      std::vector<Value> args;
      for (std::size_t k = 0; k < e.args.size(); ++k) args.push_back(sub(k));
      return evaluate(it->second.body, scop, scalars, read, args);
    }
    case O::Add:
    case O::Mul: {
      Value acc = sub(0);
      for (std::size_t k = 1; k < e.args.size(); ++k) acc = arith(e.op, acc, sub(k));
      return acc;
    }
    case O::Sub:
    case O::Div:
    case O::Mod: return arith(e.op, sub(0), sub(1));
    case O::Neg: {
      Value v = sub(0);
      if (is_double(v)) return -std::get<double>(v);
      return -as_int(v);
    }
    case O::And: {
      bool acc = true;
      for (std::size_t k = 0; k < e.args.size(); ++k) acc = as_bool(sub(k)) && acc;
      return acc;
    }
    case O::Or: {
      bool acc = false;
      for (std::size_t k = 0; k < e.args.size(); ++k) acc = as_bool(sub(k)) || acc;
      return acc;
    }
    case O::Not: return !as_bool(sub(0));
    case O::Eq:
    case O::Ne:
    case O::Lt:
    case O::Le:
    case O::Gt:
    case O::Ge: return compare(e.op, sub(0), sub(1));
    case O::Ite: return as_bool(sub(0)) ? sub(1) : sub(2);
  }
  eval_fail("bad expression node");
}

Value convert(const Value& v, ElemType to) {
  switch (to) {
    case ElemType::Bool:
      if (is_double(v)) eval_fail("cannot store float64 " + value_text(v) + " into a bool field");
      return as_int(v) != 0;
    case ElemType::Int64:
      if (is_double(v)) eval_fail("cannot store float64 " + value_text(v) + " into an int64 field");
      return as_int(v);
    case ElemType::Float64: return as_double(v);
  }
  return v;
}

}  // namespace polycomm
