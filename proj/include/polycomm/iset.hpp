#pragma once

// Exact finite integer sets and quasi-affine maps over named spaces.
//
// Every set and map in this kernel is bounded; construction of anything
// unbounded throws UnboundedSet. Boundedness is what makes enumeration a
// complete decision procedure, so emptiness, lexmin/lexmax and equality are
// answered by an ordered depth-first search over propagated bounds. Operations
// that require projection (image, inverse, closure) are evaluated over the
// finite universe and re-coalesced into affine pieces.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace polycomm {

using Point = std::vector<std::int64_t>;

/// Floor division for a positive divisor.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t d) {
  std::int64_t q = a / d;
  return (a % d != 0 && a < 0) ? q - 1 : q;
}

struct Space {
  std::string name;
  std::vector<std::string> dims;

  Space() = default;
  Space(std::string n, std::vector<std::string> d);
  /// Anonymous space with generated dim names.
  static Space anonymous(std::size_t arity, std::string name = "");

  std::size_t arity() const { return dims.size(); }
  bool operator==(const Space& o) const { return name == o.name && dims.size() == o.dims.size(); }
};

struct FloorTerm;

/// sum(coeffs[k] * x_k) + constant + sum(coeff * floor(inner / divisor)).
struct AffineExpr {
  std::vector<std::int64_t> coeffs;
  std::int64_t constant = 0;
  std::vector<FloorTerm> floors;

  AffineExpr() = default;
  explicit AffineExpr(std::size_t arity, std::int64_t c = 0);
  static AffineExpr var(std::size_t arity, std::size_t k, std::int64_t coeff = 1);

  std::size_t arity() const { return coeffs.size(); }
  std::int64_t eval(std::span<const std::int64_t> point) const;
  bool is_constant() const;
  bool has_floor() const { return !floors.empty(); }
  int floor_depth() const;
  /// Highest dim index referenced (including inside floors), -1 if none.
  int max_dim() const;
  bool uses_dim_linearly_only(std::size_t k) const;

  /// Replaces every dim k by exprs[k]; exprs all have `target_arity`.
  AffineExpr substitute(std::span<const AffineExpr> exprs, std::size_t target_arity) const;
  /// Folds constant floors, merges equal floor terms, drops zero terms.
  void normalize();

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(std::int64_t s);
  AffineExpr operator-() const;
  bool operator==(const AffineExpr& o) const;
};

struct FloorTerm {
  std::int64_t coeff = 1;
  AffineExpr inner;
  std::int64_t divisor = 1;

  bool operator==(const FloorTerm& o) const;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(std::int64_t s, AffineExpr a);
AffineExpr floor_of(const AffineExpr& inner, std::int64_t divisor);

/// expr == 0 when `equality`, else expr >= 0.
struct Constraint {
  AffineExpr expr;
  bool equality = false;

  bool holds(std::span<const std::int64_t> point) const;
  bool operator==(const Constraint& o) const = default;
};

using Conjunction = std::vector<Constraint>;

bool satisfies(const Conjunction& c, std::span<const std::int64_t> point);

/// Inclusive per-dimension bounds.
struct Box {
  Point lo, hi;
  std::size_t arity() const { return lo.size(); }
  std::int64_t volume() const;
  bool contains(std::span<const std::int64_t> p) const;
  /// Row-major rank of p inside the box.
  std::int64_t rank(std::span<const std::int64_t> p) const;
};

Conjunction box_constraints(const Box& box);

/// Bounds of a conjunction by interval propagation; nullopt when the
/// propagation proves it empty. Unbounded dims come back as +-kInfinity.
inline constexpr std::int64_t kInfinity = INT64_MAX / 4;
std::optional<Box> propagate_bounds(const Conjunction& c, std::size_t arity);

/// Visits the integer points of a conjunction in lexicographic order (or
/// reverse order when `descending`). Returning false from the visitor stops
/// the walk. Throws UnboundedSet if some dim has no finite bound.
void for_each_point(const Conjunction& c, std::size_t arity,
                    const std::function<bool(const Point&)>& visit, bool descending = false);

class IntSet {
 public:
  IntSet() = default;
  IntSet(Space space, std::vector<Conjunction> pieces);

  static IntSet empty(Space space);
  static IntSet box(Space space, const Box& b);
  /// Exact set of the given points, coalesced into as few pieces as the
  /// box / octagon / box-decomposition heuristics find.
  static IntSet from_points(Space space, std::vector<Point> points);

  const Space& space() const { return space_; }
  const std::vector<Conjunction>& pieces() const { return pieces_; }
  std::size_t arity() const { return space_.arity(); }

  bool is_empty() const;
  bool contains(std::span<const std::int64_t> p) const;
  std::vector<Point> enumerate() const;
  std::size_t count() const { return enumerate().size(); }
  Point lexmin() const;
  Point lexmax() const;
  std::optional<Box> bounding_box() const;

  IntSet with_space(Space s) const;

 private:
  Space space_;
  std::vector<Conjunction> pieces_;
};

IntSet intersect(const IntSet& a, const IntSet& b);
IntSet unite(const IntSet& a, const IntSet& b);
IntSet subtract(const IntSet& a, const IntSet& b);
bool equal(const IntSet& a, const IntSet& b);
bool is_subset(const IntSet& a, const IntSet& b);

/// True iff the length-l prefix of a is lexicographically smaller than the
/// length-l prefix of b.
bool lex_lt_prefix(std::span<const std::int64_t> a, std::span<const std::int64_t> b, std::size_t l);

struct MapPiece {
  Conjunction guard;
  std::vector<AffineExpr> outputs;
  bool operator==(const MapPiece& o) const = default;
};

using PointPair = std::pair<Point, Point>;

class IntMap {
 public:
  IntMap() = default;
  IntMap(Space domain, Space range, std::vector<MapPiece> pieces);

  static IntMap identity(const IntSet& domain);
  static IntMap empty(Space domain, Space range);
  /// Exact relation holding exactly the given pairs, fitted into affine
  /// pieces. Multi-valued inputs are split into layers by output rank.
  static IntMap from_pairs(Space domain, Space range, std::vector<PointPair> pairs);

  const Space& domain_space() const { return domain_; }
  const Space& range_space() const { return range_; }
  const std::vector<MapPiece>& pieces() const { return pieces_; }

  IntSet domain() const;
  IntSet range() const;
  /// Sorted, de-duplicated list of (input, output) pairs.
  std::vector<PointPair> graph() const;
  /// All outputs for an input, sorted and unique.
  std::vector<Point> image(std::span<const std::int64_t> p) const;
  bool is_single_valued() const;
  bool is_empty() const;

  IntMap with_spaces(Space domain, Space range) const;

 private:
  Space domain_, range_;
  std::vector<MapPiece> pieces_;
};

IntSet apply(const IntMap& m, const IntSet& s);
/// g after f.
IntMap compose(const IntMap& g, const IntMap& f);
IntMap inverse(const IntMap& m);
IntMap unite(const IntMap& a, const IntMap& b);
IntMap intersect_domain(const IntMap& m, const IntSet& s);
bool equal(const IntMap& a, const IntMap& b);
IntMap transitive_closure(const IntMap& r);

// ---- textual syntax ------------------------------------------------------

using Constants = std::map<std::string, std::int64_t, std::less<>>;

IntSet parse_set(std::string_view text, const Constants& constants = {});
IntMap parse_map(std::string_view text, const Constants& constants = {});
/// Affine expression over the given dim names (used for access indices).
AffineExpr parse_affine(std::string_view text, const std::vector<std::string>& dims,
                        const Constants& constants = {});

std::string to_string(const AffineExpr& e, const std::vector<std::string>& dims);
std::string to_string(const Conjunction& c, const std::vector<std::string>& dims);
std::string to_string(const IntSet& s);
std::string to_string(const IntMap& m);
std::string to_string(std::span<const std::int64_t> p);

}  // namespace polycomm
