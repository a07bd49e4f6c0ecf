#pragma once

// Static control part IR: fields, statements with domains, schedules, field
// accesses and expression bodies, plus the JSON input format.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polycomm/iset.hpp"

namespace polycomm {

enum class ElemType { Bool, Int64, Float64 };

const char* to_string(ElemType t);

using Value = std::variant<bool, std::int64_t, double>;

std::string value_text(const Value& v);
bool bit_equal(const Value& a, const Value& b);

struct FieldDecl {
  std::string name;
  ElemType type = ElemType::Bool;
  std::vector<std::int64_t> extents;

  std::size_t arity() const { return extents.size(); }
  Box index_box() const;
  IntSet indexset() const;
  std::int64_t size() const { return index_box().volume(); }
};

enum class AccessKind { Read, Write };

struct AccessRef {
  std::string field;
  std::vector<AffineExpr> index;  // over the statement's domain dims
  AccessKind kind = AccessKind::Read;

  Point element(std::span<const std::int64_t> instance) const;
};

/// Prefix-notation expression tree.
struct Expr {
  enum class Op {
    Const,
    Scalar,
    Param,
    Access,
    Call,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Not,
    Neg,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Ite,
  };
  Op op = Op::Const;
  Value value{std::int64_t{0}};
  std::string name;        // scalar, param or function name
  std::size_t index = 0;   // access number or param number
  std::vector<Expr> args;

  static Expr constant(Value v);
  static Expr scalar(std::string n);
  static Expr access(std::size_t k);
  static Expr node(Op op, std::vector<Expr> args);

  bool operator==(const Expr& o) const;
};

/// `(let NAME EXPR)` assigns a scalar; `(store @K EXPR)` writes access K.
struct Action {
  enum class Kind { Let, Store };
  Kind kind = Kind::Let;
  std::string target;
  std::size_t access = 0;
  Expr value;

  bool operator==(const Action& o) const = default;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  Expr body;
};

struct Statement {
  /// Prologue writes and epilogue reads every element of every field; they
  /// carry no accesses or body of their own.
  enum class Role { Normal, Prologue, Epilogue };

  std::string id;
  Role role = Role::Normal;
  IntSet domain;
  IntMap schedule;
  std::vector<AccessRef> accesses;
  std::vector<Action> body;
  /// Scalars read before being assigned in this body, and scalars assigned.
  std::vector<std::string> scalar_reads, scalar_writes;

  std::vector<std::int64_t> time(std::span<const std::int64_t> instance) const;
  std::optional<std::size_t> write_access() const;
};

struct Scop {
  Constants constants;
  std::vector<FieldDecl> fields;
  std::vector<std::int64_t> grid;
  std::size_t scatter_arity = 0;
  std::map<std::string, Function> functions;
  std::vector<Statement> statements;

  const FieldDecl& field(std::string_view name) const;
  const Statement& statement(std::string_view id) const;
  std::size_t statement_index(std::string_view id) const;
};

/// Recomputes scalar_reads / scalar_writes from the body.
void derive_scalars(Statement& s);

/// Parses and validates a JSON document. `overrides` replace entries of the
/// document's `constants` table before any set is parsed.
Scop parse_scop(std::string_view text, const Constants& overrides = {});
Scop load_scop(const std::string& path, const Constants& overrides = {});
std::string print_scop(const Scop& s);

/// Checks every invariant of a Scop; throws ValidationError.
void validate(const Scop& s);

/// Splits statements so that each has at most one field access, appending
/// one ordinal scatter dimension to every schedule.
Scop isolate_accesses(const Scop& s);

Expr parse_expr(std::string_view text, const std::vector<std::string>& params = {});
std::vector<Action> parse_body(std::string_view text);
std::string to_string(const Expr& e);
std::string body_text(const std::vector<Action>& body);

// ---- evaluation ----------------------------------------------------------

using ScalarEnv = std::map<std::string, Value, std::less<>>;

/// Evaluates an expression; `read(k)` supplies the value of access k.
Value evaluate(const Expr& e, const Scop& scop, const ScalarEnv& scalars,
               const std::function<Value(std::size_t)>& read, std::span<const Value> params = {});
Value convert(const Value& v, ElemType to);

// ---- field contents ------------------------------------------------------

struct FieldData {
  FieldDecl decl;
  std::vector<Value> values;  // row-major

  Value& at(std::span<const std::int64_t> index);
  const Value& at(std::span<const std::int64_t> index) const;
};

struct FieldContents {
  std::vector<FieldData> fields;

  FieldData& field(std::string_view name);
  const FieldData& field(std::string_view name) const;

  /// Every element zero / false.
  static FieldContents zeros(const Scop& s);
  /// SplitMix64(seed), fields in declaration order, elements row-major:
  /// bool = bit 0, int64 = (x >> 33) % 100, float64 = (x >> 11) * 2^-53.
  static FieldContents random(const Scop& s, std::uint64_t seed);
  static FieldContents parse(std::string_view text, const Scop& s);
  std::string text() const;
};

struct Divergence {
  std::string field;
  Point index;
  Value expected, got;
  std::string describe() const;
};

std::optional<Divergence> first_divergence(const FieldContents& expected, const FieldContents& got);

/// Runs every instance in ascending schedule order on one memory.
FieldContents sequential_execute(const Scop& s, const FieldContents& init);

/// All (statement index, instance) pairs in schedule order.
struct Instance {
  std::size_t stmt;
  Point point;
  Point time;
};
std::vector<Instance> schedule_order(const Scop& s);

}  // namespace polycomm
