#include <algorithm>
#include <set>

#include "polycomm/error.hpp"
#include "polycomm/iset.hpp"

namespace polycomm {

namespace {

bool piece_nonempty(const Conjunction& c, std::size_t arity) {
  bool found = false;
  for_each_point(c, arity, [&](const Point&) {
    found = true;
    return false;
  });
  return found;
}

// Map guards may be unbounded (e.g. a transpose over all of Z^2); they only
// have to be finite where something enumerates them.
bool guard_maybe_nonempty(const Conjunction& c, std::size_t arity) {
  try {
    return piece_nonempty(c, arity);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnboundedSet) throw;
    return true;
  }
}

void check_arity(const Conjunction& c, std::size_t arity) {
  for (const auto& con : c)
    if (con.expr.arity() != arity) throw Error(ErrorKind::SpaceMismatch, "constraint arity differs from space");
}

void require_same(const Space& a, const Space& b, const char* op) {
  if (!(a == b))
    throw Error(ErrorKind::SpaceMismatch, std::string(op) + ": space '" + a.name + "'/" +
                                              std::to_string(a.arity()) + " vs '" + b.name + "'/" +
                                              std::to_string(b.arity()));
}

std::vector<Conjunction> negate(const Constraint& c) {
  if (!c.equality) {
    AffineExpr e = -c.expr;
    e.constant -= 1;
    return {{Constraint{e, false}}};
  }
  AffineExpr above = c.expr;
  above.constant -= 1;
  AffineExpr below = -c.expr;
  below.constant -= 1;
  return {{Constraint{above, false}}, {Constraint{below, false}}};
}

Conjunction concat(const Conjunction& a, const Conjunction& b) {
  Conjunction r = a;
  r.insert(r.end(), b.begin(), b.end());
  return r;
}

}  // namespace

// ---- IntSet ---------------------------------------------------------------

IntSet::IntSet(Space space, std::vector<Conjunction> pieces) : space_(std::move(space)) {
  for (auto& p : pieces) {
    check_arity(p, space_.arity());
    // for_each_point raises UnboundedSet for any feasible unbounded piece.
    if (!piece_nonempty(p, space_.arity())) continue;
    if (std::find(pieces_.begin(), pieces_.end(), p) != pieces_.end()) continue;
    pieces_.push_back(std::move(p));
  }
}

IntSet IntSet::empty(Space space) { return IntSet(std::move(space), {}); }

IntSet IntSet::box(Space space, const Box& b) {
  if (b.volume() == 0) return empty(std::move(space));
  return IntSet(std::move(space), {box_constraints(b)});
}

bool IntSet::is_empty() const { return pieces_.empty(); }

bool IntSet::contains(std::span<const std::int64_t> p) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [&](const Conjunction& c) { return satisfies(c, p); });
}

std::vector<Point> IntSet::enumerate() const {
  std::vector<Point> out;
  for (const auto& c : pieces_) {
    for_each_point(c, arity(), [&](const Point& p) {
      out.push_back(p);
      return true;
    });
  }
  if (pieces_.size() > 1) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

Point IntSet::lexmin() const {
  if (is_empty()) throw Error(ErrorKind::EmptySet, "lexmin of empty set");
  std::optional<Point> best;
  for (const auto& c : pieces_) {
    for_each_point(c, arity(), [&](const Point& p) {
      if (!best || p < *best) best = p;
      return false;
    });
  }
  return *best;
}

Point IntSet::lexmax() const {
  if (is_empty()) throw Error(ErrorKind::EmptySet, "lexmax of empty set");
  std::optional<Point> best;
  for (const auto& c : pieces_) {
    for_each_point(
        c, arity(),
        [&](const Point& p) {
          if (!best || p > *best) best = p;
          return false;
        },
        true);
  }
  return *best;
}

std::optional<Box> IntSet::bounding_box() const {
  auto pts = enumerate();
  if (pts.empty()) return std::nullopt;
  Box b{pts.front(), pts.front()};
  for (const auto& p : pts) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      b.lo[k] = std::min(b.lo[k], p[k]);
      b.hi[k] = std::max(b.hi[k], p[k]);
    }
  }
  return b;
}

IntSet IntSet::with_space(Space s) const {
  if (s.arity() != arity()) throw Error(ErrorKind::SpaceMismatch, "with_space: arity differs");
  IntSet r = *this;
  r.space_ = std::move(s);
  return r;
}

IntSet intersect(const IntSet& a, const IntSet& b) {
  require_same(a.space(), b.space(), "intersect");
  std::vector<Conjunction> pieces;
  for (const auto& pa : a.pieces())
    for (const auto& pb : b.pieces()) pieces.push_back(concat(pa, pb));
  return IntSet(a.space(), std::move(pieces));
}

IntSet unite(const IntSet& a, const IntSet& b) {
  require_same(a.space(), b.space(), "union");
  std::vector<Conjunction> pieces = a.pieces();
  pieces.insert(pieces.end(), b.pieces().begin(), b.pieces().end());
  return IntSet(a.space(), std::move(pieces));
}

IntSet subtract(const IntSet& a, const IntSet& b) {
  require_same(a.space(), b.space(), "subtract");
  std::vector<Conjunction> current = a.pieces();
  for (const auto& pb : b.pieces()) {
    if (pb.empty()) return IntSet::empty(a.space());
    std::vector<Conjunction> next;
    for (const auto& pa : current) {
      // pa minus (c0 and c1 and ...) = union_k (pa and c0..c_{k-1} and not c_k)
      Conjunction prefix = pa;
      for (const auto& c : pb) {
        for (const auto& neg : negate(c)) {
          Conjunction piece = concat(prefix, neg);
          if (piece_nonempty(piece, a.arity())) next.push_back(std::move(piece));
        }
        prefix.push_back(c);
        if (!piece_nonempty(prefix, a.arity())) break;
      }
    }
    current = std::move(next);
  }
  return IntSet(a.space(), std::move(current));
}

bool equal(const IntSet& a, const IntSet& b) {
  return a.arity() == b.arity() && a.enumerate() == b.enumerate();
}

bool is_subset(const IntSet& a, const IntSet& b) {
  for (const auto& p : a.enumerate())
    if (!b.contains(p)) return false;
  return true;
}

// ---- IntMap ---------------------------------------------------------------

namespace {

std::vector<std::int64_t> eval_outputs(const MapPiece& piece, const Point& p) {
  std::vector<std::int64_t> out;
  out.reserve(piece.outputs.size());
  for (const auto& e : piece.outputs) out.push_back(e.eval(p));
  return out;
}

}  // namespace

IntMap::IntMap(Space domain, Space range, std::vector<MapPiece> pieces)
    : domain_(std::move(domain)), range_(std::move(range)) {
  for (auto& piece : pieces) {
    check_arity(piece.guard, domain_.arity());
    if (piece.outputs.size() != range_.arity())
      throw Error(ErrorKind::SpaceMismatch, "map piece has wrong output count");
    for (const auto& e : piece.outputs)
      if (e.arity() != domain_.arity()) throw Error(ErrorKind::SpaceMismatch, "map output arity differs");
    if (!guard_maybe_nonempty(piece.guard, domain_.arity())) continue;
    if (std::find(pieces_.begin(), pieces_.end(), piece) != pieces_.end()) continue;
    pieces_.push_back(std::move(piece));
  }
}

IntMap IntMap::identity(const IntSet& domain) {
  std::vector<MapPiece> pieces;
  const std::size_t n = domain.arity();
  std::vector<AffineExpr> outs;
  for (std::size_t k = 0; k < n; ++k) outs.push_back(AffineExpr::var(n, k));
  for (const auto& c : domain.pieces()) pieces.push_back({c, outs});
  return IntMap(domain.space(), domain.space(), std::move(pieces));
}

IntMap IntMap::empty(Space domain, Space range) { return IntMap(std::move(domain), std::move(range), {}); }

IntSet IntMap::domain() const {
  std::vector<Conjunction> guards;
  for (const auto& p : pieces_) guards.push_back(p.guard);
  return IntSet(domain_, std::move(guards));
}

IntSet IntMap::range() const {
  std::vector<Point> pts;
  for (const auto& [in, out] : graph()) pts.push_back(out);
  return IntSet::from_points(range_, std::move(pts));
}

std::vector<PointPair> IntMap::graph() const {
  std::vector<PointPair> out;
  for (const auto& piece : pieces_) {
    for_each_point(piece.guard, domain_.arity(), [&](const Point& p) {
      out.emplace_back(p, eval_outputs(piece, p));
      return true;
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Point> IntMap::image(std::span<const std::int64_t> p) const {
  std::vector<Point> out;
  Point pt(p.begin(), p.end());
  for (const auto& piece : pieces_)
    if (satisfies(piece.guard, pt)) out.push_back(eval_outputs(piece, pt));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool IntMap::is_single_valued() const {
  auto g = graph();
  for (std::size_t k = 1; k < g.size(); ++k)
    if (g[k].first == g[k - 1].first) return false;
  return true;
}

bool IntMap::is_empty() const { return pieces_.empty(); }

IntMap IntMap::with_spaces(Space domain, Space range) const {
  if (domain.arity() != domain_.arity() || range.arity() != range_.arity())
    throw Error(ErrorKind::SpaceMismatch, "with_spaces: arity differs");
  IntMap r = *this;
  r.domain_ = std::move(domain);
  r.range_ = std::move(range);
  return r;
}

IntSet apply(const IntMap& m, const IntSet& s) {
  require_same(m.domain_space(), s.space(), "apply");
  std::vector<Point> out;
  for (const auto& p : s.enumerate())
    for (auto& q : m.image(p)) out.push_back(std::move(q));
  return IntSet::from_points(m.range_space(), std::move(out));
}

IntMap compose(const IntMap& g, const IntMap& f) {
  require_same(f.range_space(), g.domain_space(), "compose");
  const std::size_t n = f.domain_space().arity();
  std::vector<MapPiece> pieces;
  for (const auto& pf : f.pieces()) {
    for (const auto& pg : g.pieces()) {
      MapPiece r;
      r.guard = pf.guard;
      for (const auto& c : pg.guard) r.guard.push_back({c.expr.substitute(pf.outputs, n), c.equality});
      for (const auto& e : pg.outputs) r.outputs.push_back(e.substitute(pf.outputs, n));
      pieces.push_back(std::move(r));
    }
  }
  return IntMap(f.domain_space(), g.range_space(), std::move(pieces));
}

IntMap inverse(const IntMap& m) {
  std::vector<PointPair> pairs;
  for (auto& [in, out] : m.graph()) pairs.emplace_back(out, in);
  return IntMap::from_pairs(m.range_space(), m.domain_space(), std::move(pairs));
}

IntMap unite(const IntMap& a, const IntMap& b) {
  require_same(a.domain_space(), b.domain_space(), "union");
  require_same(a.range_space(), b.range_space(), "union");
  std::vector<MapPiece> pieces = a.pieces();
  pieces.insert(pieces.end(), b.pieces().begin(), b.pieces().end());
  return IntMap(a.domain_space(), a.range_space(), std::move(pieces));
}

IntMap intersect_domain(const IntMap& m, const IntSet& s) {
  require_same(m.domain_space(), s.space(), "intersect_domain");
  std::vector<MapPiece> pieces;
  for (const auto& p : m.pieces())
    for (const auto& c : s.pieces()) pieces.push_back({concat(p.guard, c), p.outputs});
  return IntMap(m.domain_space(), m.range_space(), std::move(pieces));
}

bool equal(const IntMap& a, const IntMap& b) {
  return a.domain_space().arity() == b.domain_space().arity() &&
         a.range_space().arity() == b.range_space().arity() && a.graph() == b.graph();
}

IntMap transitive_closure(const IntMap& r) {
  if (r.domain_space().arity() != r.range_space().arity())
    throw Error(ErrorKind::SpaceMismatch, "transitive_closure needs a relation on one space");
  auto base = r.graph();
  std::set<Point> universe;
  std::map<Point, std::set<Point>> succ;
  for (const auto& [a, b] : base) {
    succ[a].insert(b);
    universe.insert(a);
    universe.insert(b);
  }
  std::set<PointPair> closure(base.begin(), base.end());
  // R_{k+1} = R_k u (R_k ; R) adds one path length per round, so the
  // fixpoint is reached within |universe| rounds.
  const std::size_t cap = universe.size() + 1;
  std::size_t rounds = 0;
  for (;;) {
    if (++rounds > cap) throw Error(ErrorKind::IterationCapExceeded, "transitive closure did not converge");
    std::vector<PointPair> added;
    for (const auto& [a, b] : closure) {
      auto it = succ.find(b);
      if (it == succ.end()) continue;
      for (const auto& c : it->second)
        if (!closure.count({a, c})) added.emplace_back(a, c);
    }
    if (added.empty()) break;
    closure.insert(added.begin(), added.end());
  }
  return IntMap::from_pairs(r.domain_space(), r.range_space(),
                            std::vector<PointPair>(closure.begin(), closure.end()));
}

}  // namespace polycomm
