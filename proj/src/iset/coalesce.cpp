#include <algorithm>
#include <map>
#include <set>

#include "polycomm/error.hpp"
#include "polycomm/iset.hpp"

namespace polycomm {

namespace {

constexpr std::int64_t kOctagonVolumeCap = std::int64_t{1} << 22;

Box hull_of(const std::vector<Point>& pts) {
  Box b{pts.front(), pts.front()};
  for (const auto& p : pts) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      b.lo[k] = std::min(b.lo[k], p[k]);
      b.hi[k] = std::max(b.hi[k], p[k]);
    }
  }
  return b;
}

// Octagon hull: the box plus tight bounds on x_i + x_j and x_i - x_j.
// Exact when its point count matches.
std::optional<Conjunction> octagon(const std::vector<Point>& pts, const Box& box) {
  const std::size_t n = box.arity();
  if (n < 2 || box.volume() > kOctagonVolumeCap) return std::nullopt;
  Conjunction c = box_constraints(box);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (int sign : {1, -1}) {
        std::int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (const auto& p : pts) {
          std::int64_t v = p[i] + sign * p[j];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const std::int64_t box_lo = box.lo[i] + (sign > 0 ? box.lo[j] : -box.hi[j]);
        const std::int64_t box_hi = box.hi[i] + (sign > 0 ? box.hi[j] : -box.lo[j]);
        AffineExpr e = AffineExpr::var(n, i) + AffineExpr::var(n, j, sign);
        if (lo > box_lo) {
          AffineExpr g = e;
          g.constant = -lo;
          c.push_back({g, false});
        }
        if (hi < box_hi) {
          AffineExpr g = -e;
          g.constant = hi;
          c.push_back({g, false});
        }
      }
    }
  }
  std::size_t count = 0;
  for_each_point(c, n, [&](const Point&) {
    ++count;
    return count <= pts.size();
  });
  if (count != pts.size()) return std::nullopt;
  return c;
}

// Greedy decomposition into maximal boxes, growing the innermost dim first.
std::vector<Conjunction> box_cover(const std::vector<Point>& pts) {
  std::set<Point> open(pts.begin(), pts.end());
  std::vector<Conjunction> out;
  const std::size_t n = pts.front().size();
  for (const auto& start : pts) {
    if (!open.count(start)) continue;
    Box b{start, start};
    for (std::size_t d = n; d-- > 0;) {
      for (;;) {
        Box slab = b;
        slab.lo[d] = slab.hi[d] = b.hi[d] + 1;
        bool full = true;
        Point q = slab.lo;
        // walk the slab
        for (;;) {
          if (!open.count(q)) {
            full = false;
            break;
          }
          std::size_t k = n;
          while (k-- > 0) {
            if (q[k] < slab.hi[k]) {
              ++q[k];
              break;
            }
            q[k] = slab.lo[k];
          }
          if (k == static_cast<std::size_t>(-1)) break;
        }
        if (!full) break;
        b.hi[d] += 1;
      }
    }
    Point q = b.lo;
    for (;;) {
      open.erase(q);
      std::size_t k = n;
      while (k-- > 0) {
        if (q[k] < b.hi[k]) {
          ++q[k];
          break;
        }
        q[k] = b.lo[k];
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
    out.push_back(box_constraints(b));
  }
  return out;
}

std::vector<Conjunction> cover(std::vector<Point> pts) {
  if (pts.empty()) return {};
  if (pts.front().empty()) return {Conjunction{}};
  Box box = hull_of(pts);
  if (box.volume() == static_cast<std::int64_t>(pts.size())) return {box_constraints(box)};
  if (auto oct = octagon(pts, box)) return {*oct};
  return box_cover(pts);
}

}  // namespace

IntSet IntSet::from_points(Space space, std::vector<Point> points) {
  for (const auto& p : points)
    if (p.size() != space.arity()) throw Error(ErrorKind::SpaceMismatch, "point arity differs from space");
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  IntSet s;
  s.space_ = std::move(space);
  s.pieces_ = cover(std::move(points));
  return s;
}

namespace {

struct Candidate {
  std::vector<AffineExpr> outputs;
  std::size_t hits = 0;
};

std::vector<AffineExpr> build(const Point& p0, const Point& f0, const std::vector<Point>& columns) {
  const std::size_t n = p0.size(), m = f0.size();
  std::vector<AffineExpr> outs;
  for (std::size_t r = 0; r < m; ++r) {
    AffineExpr e(n);
    std::int64_t c = f0[r];
    for (std::size_t k = 0; k < n; ++k) {
      e.coeffs[k] = columns[k][r];
      c -= columns[k][r] * p0[k];
    }
    e.constant = c;
    outs.push_back(std::move(e));
  }
  return outs;
}

std::size_t count_hits(const std::vector<AffineExpr>& outs, const std::map<Point, Point>& fn) {
  std::size_t hits = 0;
  for (const auto& [in, out] : fn) {
    bool ok = true;
    for (std::size_t r = 0; r < outs.size() && ok; ++r) ok = outs[r].eval(in) == out[r];
    hits += ok;
  }
  return hits;
}

// Fits a single-valued finite function with affine pieces. Each round anchors
// at the lex-first unexplained input and picks, per dim, the slope seen at the
// +1 or -1 neighbour (or zero) that explains the most remaining inputs.
std::vector<MapPiece> fit_function(std::map<Point, Point> fn, std::size_t n) {
  std::vector<MapPiece> pieces;
  while (!fn.empty()) {
    const Point p0 = fn.begin()->first;
    const Point f0 = fn.begin()->second;
    const std::size_t m = f0.size();
    std::vector<std::vector<Point>> options(n);
    for (std::size_t k = 0; k < n; ++k) {
      Point up = p0, down = p0;
      ++up[k];
      --down[k];
      if (auto it = fn.find(up); it != fn.end()) {
        Point col(m);
        for (std::size_t r = 0; r < m; ++r) col[r] = it->second[r] - f0[r];
        options[k].push_back(col);
      }
      if (auto it = fn.find(down); it != fn.end()) {
        Point col(m);
        for (std::size_t r = 0; r < m; ++r) col[r] = f0[r] - it->second[r];
        if (std::find(options[k].begin(), options[k].end(), col) == options[k].end()) options[k].push_back(col);
      }
      Point zero(m, 0);
      if (std::find(options[k].begin(), options[k].end(), zero) == options[k].end()) options[k].push_back(zero);
    }
    std::vector<Point> columns(n);
    for (std::size_t k = 0; k < n; ++k) columns[k] = options[k].front();
    Candidate best{build(p0, f0, columns), 0};
    best.hits = count_hits(best.outputs, fn);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t o = 1; o < options[k].size(); ++o) {
        auto trial = columns;
        trial[k] = options[k][o];
        auto outs = build(p0, f0, trial);
        std::size_t hits = count_hits(outs, fn);
        if (hits > best.hits) {
          best = {std::move(outs), hits};
          columns = std::move(trial);
        }
      }
    }
    std::vector<Point> matched;
    for (auto it = fn.begin(); it != fn.end();) {
      bool ok = true;
      for (std::size_t r = 0; r < m && ok; ++r) ok = best.outputs[r].eval(it->first) == it->second[r];
      if (ok) {
        matched.push_back(it->first);
        it = fn.erase(it);
      } else {
        ++it;
      }
    }
    for (auto& guard : cover(std::move(matched))) pieces.push_back({std::move(guard), best.outputs});
  }
  return pieces;
}

}  // namespace

IntMap IntMap::from_pairs(Space domain, Space range, std::vector<PointPair> pairs) {
  for (const auto& [a, b] : pairs) {
    if (a.size() != domain.arity() || b.size() != range.arity())
      throw Error(ErrorKind::SpaceMismatch, "pair arity differs from map spaces");
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  // Layer k holds the k-th smallest output of every input.
  std::vector<std::map<Point, Point>> layers;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].first == pairs[i].first) {
      if (layers.size() <= j - i) layers.emplace_back();
      layers[j - i].emplace(pairs[j].first, pairs[j].second);
      ++j;
    }
    i = j;
  }
  IntMap m;
  m.domain_ = std::move(domain);
  m.range_ = std::move(range);
  for (auto& layer : layers) {
    for (auto& piece : fit_function(std::move(layer), m.domain_.arity())) m.pieces_.push_back(std::move(piece));
  }
  return m;
}

}  // namespace polycomm
