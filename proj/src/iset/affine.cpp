#include <algorithm>
#include <cassert>

#include "polycomm/error.hpp"
#include "polycomm/iset.hpp"

namespace polycomm {

Space::Space(std::string n, std::vector<std::string> d) : name(std::move(n)), dims(std::move(d)) {}

Space Space::anonymous(std::size_t arity, std::string name) {
  std::vector<std::string> dims;
  for (std::size_t k = 0; k < arity; ++k) dims.push_back("i" + std::to_string(k));
  return Space(std::move(name), std::move(dims));
}

AffineExpr::AffineExpr(std::size_t arity, std::int64_t c) : coeffs(arity, 0), constant(c) {}

AffineExpr AffineExpr::var(std::size_t arity, std::size_t k, std::int64_t coeff) {
  AffineExpr e(arity);
  e.coeffs[k] = coeff;
  return e;
}

std::int64_t AffineExpr::eval(std::span<const std::int64_t> point) const {
  std::int64_t v = constant;
  for (std::size_t k = 0; k < coeffs.size(); ++k) v += coeffs[k] * point[k];
  for (const auto& f : floors) v += f.coeff * floor_div(f.inner.eval(point), f.divisor);
  return v;
}

bool AffineExpr::is_constant() const {
  return floors.empty() && std::all_of(coeffs.begin(), coeffs.end(), [](auto c) { return c == 0; });
}

int AffineExpr::floor_depth() const {
  int d = 0;
  for (const auto& f : floors) d = std::max(d, 1 + f.inner.floor_depth());
  return d;
}

int AffineExpr::max_dim() const {
  int m = -1;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != 0) m = static_cast<int>(k);
  for (const auto& f : floors) m = std::max(m, f.inner.max_dim());
  return m;
}

bool AffineExpr::uses_dim_linearly_only(std::size_t k) const {
  for (const auto& f : floors) {
    if (f.inner.coeffs[k] != 0) return false;
    if (!f.inner.uses_dim_linearly_only(k)) return false;
  }
  return true;
}

void AffineExpr::normalize() {
  std::vector<FloorTerm> merged;
  for (auto& f : floors) {
    f.inner.normalize();
    if (f.coeff == 0) continue;
    if (f.divisor == 1) {
      AffineExpr inner = f.inner;
      inner *= f.coeff;
      for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] += inner.coeffs[k];
      constant += inner.constant;
      for (auto& g : inner.floors) merged.push_back(std::move(g));
      continue;
    }
    if (f.inner.is_constant()) {
      constant += f.coeff * floor_div(f.inner.constant, f.divisor);
      continue;
    }
    auto it = std::find_if(merged.begin(), merged.end(), [&](const FloorTerm& g) {
      return g.divisor == f.divisor && g.inner == f.inner;
    });
    if (it != merged.end())
      it->coeff += f.coeff;
    else
      merged.push_back(f);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(), [](const FloorTerm& g) { return g.coeff == 0; }),
               merged.end());
  floors = std::move(merged);
}

AffineExpr AffineExpr::substitute(std::span<const AffineExpr> exprs, std::size_t target_arity) const {
  assert(exprs.size() == coeffs.size());
  AffineExpr r(target_arity, constant);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0) continue;
    AffineExpr t = exprs[k];
    t *= coeffs[k];
    r += t;
  }
  for (const auto& f : floors) {
    r.floors.push_back(FloorTerm{f.coeff, f.inner.substitute(exprs, target_arity), f.divisor});
  }
  r.normalize();
  return r;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  assert(o.coeffs.size() == coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] += o.coeffs[k];
  constant += o.constant;
  floors.insert(floors.end(), o.floors.begin(), o.floors.end());
  normalize();
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) { return *this += -o; }

AffineExpr& AffineExpr::operator*=(std::int64_t s) {
  for (auto& c : coeffs) c *= s;
  constant *= s;
  for (auto& f : floors) f.coeff *= s;
  normalize();
  return *this;
}

AffineExpr AffineExpr::operator-() const {
  AffineExpr r = *this;
  r *= -1;
  return r;
}

bool AffineExpr::operator==(const AffineExpr& o) const {
  return coeffs == o.coeffs && constant == o.constant && floors == o.floors;
}

bool FloorTerm::operator==(const FloorTerm& o) const {
  return coeff == o.coeff && divisor == o.divisor && inner == o.inner;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator*(std::int64_t s, AffineExpr a) { return a *= s; }

AffineExpr floor_of(const AffineExpr& inner, std::int64_t divisor) {
  if (divisor <= 0) throw Error(ErrorKind::ParseError, "floor divisor must be positive");
  AffineExpr r(inner.arity());
  r.floors.push_back(FloorTerm{1, inner, divisor});
  r.normalize();
  return r;
}

bool Constraint::holds(std::span<const std::int64_t> point) const {
  std::int64_t v = expr.eval(point);
  return equality ? v == 0 : v >= 0;
}

bool satisfies(const Conjunction& c, std::span<const std::int64_t> point) {
  return std::all_of(c.begin(), c.end(), [&](const Constraint& k) { return k.holds(point); });
}

std::int64_t Box::volume() const {
  std::int64_t v = 1;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (hi[k] < lo[k]) return 0;
    v *= hi[k] - lo[k] + 1;
  }
  return v;
}

bool Box::contains(std::span<const std::int64_t> p) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (p[k] < lo[k] || p[k] > hi[k]) return false;
  return true;
}

std::int64_t Box::rank(std::span<const std::int64_t> p) const {
  std::int64_t r = 0;
  for (std::size_t k = 0; k < lo.size(); ++k) r = r * (hi[k] - lo[k] + 1) + (p[k] - lo[k]);
  return r;
}

Conjunction box_constraints(const Box& box) {
  Conjunction c;
  const std::size_t n = box.arity();
  for (std::size_t k = 0; k < n; ++k) {
    if (box.lo[k] == box.hi[k]) {
      AffineExpr e = AffineExpr::var(n, k);
      e.constant = -box.lo[k];
      c.push_back({e, true});
      continue;
    }
    AffineExpr lower = AffineExpr::var(n, k);
    lower.constant = -box.lo[k];
    AffineExpr upper = AffineExpr::var(n, k, -1);
    upper.constant = box.hi[k];
    c.push_back({lower, false});
    c.push_back({upper, false});
  }
  return c;
}

namespace {

using Wide = __int128;

struct Range {
  Wide lo = 0, hi = 0;
  bool lo_inf = false, hi_inf = false;
};

bool is_inf(std::int64_t v) { return v <= -kInfinity || v >= kInfinity; }

Range scaled(Wide a, std::int64_t lo, std::int64_t hi) {
  Range r;
  const bool lo_inf = lo <= -kInfinity, hi_inf = hi >= kInfinity;
  if (a >= 0) {
    r.lo = a * lo;
    r.hi = a * hi;
    r.lo_inf = lo_inf && a != 0;
    r.hi_inf = hi_inf && a != 0;
  } else {
    r.lo = a * hi;
    r.hi = a * lo;
    r.lo_inf = hi_inf;
    r.hi_inf = lo_inf;
  }
  return r;
}

Wide wide_floor_div(Wide a, Wide d) {
  Wide q = a / d;
  return (a % d != 0 && a < 0) ? q - 1 : q;
}

Wide wide_ceil_div(Wide a, Wide d) { return -wide_floor_div(-a, d); }

Range range_of(const AffineExpr& e, const Box& b, int skip) {
  Range r;
  r.lo = r.hi = e.constant;
  for (std::size_t k = 0; k < e.coeffs.size(); ++k) {
    if (static_cast<int>(k) == skip || e.coeffs[k] == 0) continue;
    Range t = scaled(e.coeffs[k], b.lo[k], b.hi[k]);
    r.lo += t.lo;
    r.hi += t.hi;
    r.lo_inf |= t.lo_inf;
    r.hi_inf |= t.hi_inf;
  }
  for (const auto& f : e.floors) {
    Range in = range_of(f.inner, b, -1);
    Range fl;
    fl.lo = wide_floor_div(in.lo, f.divisor);
    fl.hi = wide_floor_div(in.hi, f.divisor);
    fl.lo_inf = in.lo_inf;
    fl.hi_inf = in.hi_inf;
    Range t;
    if (f.coeff >= 0) {
      t.lo = fl.lo * f.coeff;
      t.hi = fl.hi * f.coeff;
      t.lo_inf = fl.lo_inf;
      t.hi_inf = fl.hi_inf;
    } else {
      t.lo = fl.hi * f.coeff;
      t.hi = fl.lo * f.coeff;
      t.lo_inf = fl.hi_inf;
      t.hi_inf = fl.lo_inf;
    }
    r.lo += t.lo;
    r.hi += t.hi;
    r.lo_inf |= t.lo_inf;
    r.hi_inf |= t.hi_inf;
  }
  return r;
}

std::int64_t clamp_wide(Wide v) {
  if (v <= -kInfinity) return -kInfinity;
  if (v >= kInfinity) return kInfinity;
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::optional<Box> propagate_bounds(const Conjunction& c, std::size_t arity) {
  Box b{Point(arity, -kInfinity), Point(arity, kInfinity)};
  for (int round = 0; round < 256; ++round) {
    bool changed = false;
    for (const auto& con : c) {
      Range full = range_of(con.expr, b, -1);
      if (!full.hi_inf && full.hi < 0) return std::nullopt;
      if (con.equality && !full.lo_inf && full.lo > 0) return std::nullopt;
      for (std::size_t j = 0; j < arity; ++j) {
        const std::int64_t a = con.expr.coeffs[j];
        if (a == 0) continue;
        Range rest = range_of(con.expr, b, static_cast<int>(j));
        auto tighten_lo = [&](Wide v) {
          std::int64_t nv = clamp_wide(v);
          if (nv > b.lo[j]) {
            b.lo[j] = nv;
            changed = true;
          }
        };
        auto tighten_hi = [&](Wide v) {
          std::int64_t nv = clamp_wide(v);
          if (nv < b.hi[j]) {
            b.hi[j] = nv;
            changed = true;
          }
        };
        // a*x + rest >= 0
        if (!rest.hi_inf) {
          if (a > 0)
            tighten_lo(wide_ceil_div(-rest.hi, a));
          else
            tighten_hi(wide_floor_div(rest.hi, -a));
        }
        // a*x + rest <= 0 for equalities
        if (con.equality && !rest.lo_inf) {
          if (a > 0)
            tighten_hi(wide_floor_div(-rest.lo, a));
          else
            tighten_lo(wide_ceil_div(rest.lo, -a));
        }
        if (b.lo[j] > b.hi[j]) return std::nullopt;
      }
    }
    if (!changed) break;
  }
  return b;
}

namespace {

struct Walker {
  std::size_t n;
  Box box;
  std::vector<std::vector<const Constraint*>> solve;  // linear in their max dim
  std::vector<std::vector<const Constraint*>> check;  // everything else, by max dim
  const std::function<bool(const Point&)>* visit;
  bool descending;
  Point p;

  bool rec(std::size_t d) {
    if (d == n) return (*visit)(p);
    std::int64_t lo = box.lo[d], hi = box.hi[d];
    p[d] = 0;
    for (const Constraint* c : solve[d]) {
      const std::int64_t a = c->expr.coeffs[d];
      const std::int64_t rest = c->expr.eval(p);
      if (c->equality) {
        if (rest % a != 0) return true;
        const std::int64_t v = -rest / a;
        lo = std::max(lo, v);
        hi = std::min(hi, v);
      } else if (a > 0) {
        lo = std::max(lo, static_cast<std::int64_t>(wide_ceil_div(-rest, a)));
      } else {
        hi = std::min(hi, static_cast<std::int64_t>(wide_floor_div(rest, -a)));
      }
    }
    if (lo > hi) return true;
    for (std::int64_t i = 0; i <= hi - lo; ++i) {
      p[d] = descending ? hi - i : lo + i;
      bool ok = true;
      for (const Constraint* c : check[d]) {
        if (!c->holds(p)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (!rec(d + 1)) return false;
    }
    return true;
  }
};

}  // namespace

void for_each_point(const Conjunction& c, std::size_t arity, const std::function<bool(const Point&)>& visit,
                    bool descending) {
  for (const auto& con : c) {
    if (con.expr.arity() != arity) throw Error(ErrorKind::SpaceMismatch, "constraint arity differs from space");
  }
  auto box = propagate_bounds(c, arity);
  if (!box) return;
  for (std::size_t k = 0; k < arity; ++k) {
    if (is_inf(box->lo[k]) || is_inf(box->hi[k]))
      throw Error(ErrorKind::UnboundedSet, "dimension " + std::to_string(k) + " has no finite bound");
  }
  Walker w;
  w.n = arity;
  w.box = *box;
  w.solve.resize(arity);
  w.check.resize(arity);
  w.visit = &visit;
  w.descending = descending;
  w.p.assign(arity, 0);
  for (const auto& con : c) {
    int d = con.expr.max_dim();
    if (d < 0) {
      if (!con.holds(w.p)) return;
      continue;
    }
    if (con.expr.coeffs[d] != 0 && con.expr.uses_dim_linearly_only(d))
      w.solve[d].push_back(&con);
    else
      w.check[d].push_back(&con);
  }
  w.rec(0);
}

bool lex_lt_prefix(std::span<const std::int64_t> a, std::span<const std::int64_t> b, std::size_t l) {
  const std::size_t n = std::min({l, a.size(), b.size()});
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

}  // namespace polycomm
