#include <algorithm>
#include <charconv>

#include "polycomm/error.hpp"
#include "polycomm/placement.hpp"

namespace polycomm {

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (auto e : extents) n *= static_cast<std::size_t>(e);
  return n;
}

Box Grid::box() const {
  Box b;
  for (auto e : extents) {
    b.lo.push_back(0);
    b.hi.push_back(e - 1);
  }
  return b;
}

Point Grid::node(std::size_t id) const {
  Point p(extents.size());
  for (std::size_t d = extents.size(); d-- > 0;) {
    p[d] = static_cast<std::int64_t>(id % static_cast<std::size_t>(extents[d]));
    id /= static_cast<std::size_t>(extents[d]);
  }
  return p;
}

std::size_t Grid::id(std::span<const std::int64_t> node) const {
  if (node.size() != extents.size() || !box().contains(node))
    throw Error(ErrorKind::ValidationError, "node " + to_string(node) + " is not on grid " + grid_text(*this));
  return static_cast<std::size_t>(box().rank(node));
}

Grid parse_grid(std::string_view text) {
  Grid g;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('x', pos);
    if (end == std::string_view::npos) end = text.size();
    std::int64_t v = 0;
    auto part = text.substr(pos, end - pos);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
      throw Error(ErrorKind::ParseError, "bad grid '" + std::string(text) + "', expected e.g. 2x2");
    if (v < 1) throw Error(ErrorKind::ValidationError, "grid extents must be >= 1");
    g.extents.push_back(v);
    pos = end + 1;
  }
  return g;
}

std::string grid_text(const Grid& g) {
  std::string out;
  for (std::size_t d = 0; d < g.extents.size(); ++d) out += (d ? "x" : "") + std::to_string(g.extents[d]);
  return out;
}

// ---- field placement -------------------------------------------------------

namespace {

std::size_t field_slot(const std::vector<std::string>& names, std::string_view field) {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == field) return k;
  throw Error(ErrorKind::ValidationError, "no placement for field '" + std::string(field) + "'");
}

}  // namespace

const IntMap& FieldPlacement::of(std::string_view field) const { return pi[field_slot(fields, field)]; }

const std::vector<std::int64_t>& FieldPlacement::block(std::string_view field) const {
  return blocks[field_slot(fields, field)];
}

std::vector<std::size_t> FieldPlacement::homes(std::string_view field, std::span<const std::int64_t> element) const {
  std::vector<std::size_t> out;
  for (const auto& n : of(field).image(element)) out.push_back(grid.id(n));
  return out;
}

FieldPlacement block_distribute(const std::vector<FieldDecl>& fields, const Grid& grid) {
  FieldPlacement fp;
  fp.grid = grid;
  for (const auto& f : fields) {
    if (f.arity() != grid.arity())
      throw Error(ErrorKind::ValidationError, "field " + f.name + " has " + std::to_string(f.arity()) +
                                                  " dims but the grid has " + std::to_string(grid.arity()));
    std::vector<std::int64_t> block;
    std::vector<AffineExpr> outs;
    for (std::size_t d = 0; d < f.arity(); ++d) {
      if (f.extents[d] % grid.extents[d] != 0)
        throw Error(ErrorKind::IndivisibleExtent, "field " + f.name + " dimension " + std::to_string(d) +
                                                      ": extent " + std::to_string(f.extents[d]) +
                                                      " is not divisible by grid extent " +
                                                      std::to_string(grid.extents[d]));
      block.push_back(f.extents[d] / grid.extents[d]);
      // A single node along d: floor(k/extent) is 0 everywhere on the field.
      outs.push_back(grid.extents[d] == 1 ? AffineExpr(f.arity())
                                          : floor_of(AffineExpr::var(f.arity(), d), block.back()));
    }
    const IntSet idx = f.indexset();
    fp.fields.push_back(f.name);
    fp.blocks.push_back(block);
    fp.pi.emplace_back(idx.space(), grid.space(), std::vector<MapPiece>{{box_constraints(f.index_box()), outs}});
  }
  return fp;
}

// ---- statement placement ---------------------------------------------------

namespace {

std::size_t instance_index(const std::vector<Point>& instances, std::span<const std::int64_t> p) {
  auto it = std::lower_bound(instances.begin(), instances.end(), p,
                             [](const Point& a, std::span<const std::int64_t> b) {
                               return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
                             });
  if (it == instances.end() || !std::equal(it->begin(), it->end(), p.begin(), p.end()))
    throw Error(ErrorKind::ValidationError, "instance " + to_string(p) + " not in domain");
  return static_cast<std::size_t>(it - instances.begin());
}

bool merge_into(NodeSet& into, const NodeSet& from) {
  const std::size_t before = into.size();
  NodeSet merged;
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(merged));
  into = std::move(merged);
  return into.size() != before;
}

struct InstRef {
  std::size_t stmt, index;
};

}  // namespace

const NodeSet& StmtPlacement::at(std::size_t stmt, std::span<const std::int64_t> instance) const {
  return nodes.at(stmt)[instance_index(instances.at(stmt), instance)];
}

NodeSet& StmtPlacement::at(std::size_t stmt, std::span<const std::int64_t> instance) {
  return nodes.at(stmt)[instance_index(instances.at(stmt), instance)];
}

IntMap StmtPlacement::relation(const Scop& s, std::size_t stmt) const {
  std::vector<PointPair> pairs;
  for (std::size_t k = 0; k < instances[stmt].size(); ++k)
    for (auto n : nodes[stmt][k]) pairs.emplace_back(instances[stmt][k], grid.node(n));
  return IntMap::from_pairs(s.statements[stmt].domain.space(), grid.space(), std::move(pairs));
}

StmtPlacement place_statements(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement* seed) {
  const Scop& s = d.scop;
  StmtPlacement sp;
  sp.grid = fp.grid;
  for (const auto& st : s.statements) {
    sp.instances.push_back(st.domain.enumerate());
    sp.nodes.emplace_back(sp.instances.back().size());
  }
  if (seed) {
    if (seed->nodes.size() != sp.nodes.size())
      throw Error(ErrorKind::ValidationError, "seed placement does not match the SCoP");
    for (std::size_t k = 0; k < sp.nodes.size(); ++k) {
      if (seed->nodes[k].size() != sp.nodes[k].size())
        throw Error(ErrorKind::ValidationError, "seed placement does not match statement " + s.statements[k].id);
      sp.nodes[k] = seed->nodes[k];
    }
  }

  NodeSet all(fp.grid.size());
  for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
  for (std::size_t k : {d.prologue, d.epilogue}) merge_into(sp.nodes[k][0], all);

  // Owner computes.
  for (std::size_t k = 0; k < s.statements.size(); ++k) {
    const Statement& st = s.statements[k];
    for (const auto& a : st.accesses) {
      if (a.kind != AccessKind::Write) continue;
      for (std::size_t j = 0; j < sp.instances[k].size(); ++j)
        merge_into(sp.nodes[k][j], fp.homes(a.field, a.element(sp.instances[k][j])));
    }
  }

  // Scalar edges, consumers latest first so a chain settles in one sweep.
  std::vector<std::pair<InstRef, InstRef>> scalar_edges;  // (producer, consumer)
  std::vector<std::pair<InstRef, NodeSet>> input_seeds;
  std::vector<std::vector<std::vector<InstRef>>> neighbours(s.statements.size());
  for (std::size_t k = 0; k < s.statements.size(); ++k) neighbours[k].resize(sp.instances[k].size());
  for (const auto& fam : d.families) {
    const bool virt = fam.kind == FlowKind::Input || fam.kind == FlowKind::Output;
    for (const auto& e : fam.edges) {
      if (fam.kind == FlowKind::Input) {
        input_seeds.push_back({{fam.consumer, instance_index(sp.instances[fam.consumer], e.consumer)},
                               fp.homes(fam.carrier, e.element)});
        continue;
      }
      if (virt) continue;
      InstRef p{fam.producer, instance_index(sp.instances[fam.producer], e.producer)};
      InstRef c{fam.consumer, instance_index(sp.instances[fam.consumer], e.consumer)};
      if (fam.kind == FlowKind::Scalar) scalar_edges.push_back({p, c});
      neighbours[p.stmt][p.index].push_back(c);
      neighbours[c.stmt][c.index].push_back(p);
    }
  }
  auto time_of = [&](const InstRef& r) { return s.statements[r.stmt].time(sp.instances[r.stmt][r.index]); };
  std::sort(scalar_edges.begin(), scalar_edges.end(),
            [&](const auto& a, const auto& b) { return time_of(a.second) > time_of(b.second); });

  auto propagate = [&] {
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [p, c] : scalar_edges)
        changed |= merge_into(sp.nodes[p.stmt][p.index], sp.nodes[c.stmt][c.index]);
    }
  };

  for (;;) {
    propagate();
    bool progress = false;
    for (const auto& [c, homes] : input_seeds)
      if (sp.nodes[c.stmt][c.index].empty()) progress |= merge_into(sp.nodes[c.stmt][c.index], homes);
    if (progress) continue;
    bool free_left = false;
    for (std::size_t k = 0; k < s.statements.size(); ++k) {
      for (std::size_t j = 0; j < sp.nodes[k].size(); ++j) {
        if (!sp.nodes[k][j].empty()) continue;
        std::optional<std::size_t> best;
        for (const auto& nb : neighbours[k][j]) {
          const NodeSet& ns = sp.nodes[nb.stmt][nb.index];
          if (!ns.empty() && (!best || ns.front() < *best)) best = ns.front();
        }
        if (best) {
          sp.nodes[k][j] = {*best};
          progress = true;
        } else {
          free_left = true;
        }
      }
    }
    if (progress) continue;
    if (!free_left) break;
    // Nothing constrains what is left: put the first free instance on the
    // lexmin node and let it pull its neighbours along.
    for (std::size_t k = 0; k < s.statements.size() && !progress; ++k)
      for (std::size_t j = 0; j < sp.nodes[k].size() && !progress; ++j)
        if (sp.nodes[k][j].empty()) {
          sp.nodes[k][j] = {0};
          progress = true;
        }
  }
  return sp;
}

IntMap symbolic_placement(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp, std::size_t stmt) {
  const Scop& s = d.scop;
  const Statement& st = s.statements[stmt];
  const IntMap exact = sp.relation(s, stmt);
  const std::size_t n = st.domain.arity();

  // Own write first, then own reads, then everything else of matching arity.
  std::vector<const AccessRef*> candidates;
  for (int pass = 0; pass < 3; ++pass)
    for (std::size_t k = 0; k < s.statements.size(); ++k) {
      const Statement& other = s.statements[k];
      if (other.domain.arity() != n || (pass < 2) != (k == stmt)) continue;
      for (const auto& a : other.accesses)
        if (pass == 2 || (a.kind == AccessKind::Write) == (pass == 0)) candidates.push_back(&a);
    }
  for (const AccessRef* a : candidates) {
    const IntMap& pe = fp.of(a->field);
    if (pe.pieces().size() != 1) continue;
    std::vector<AffineExpr> outs;
    for (const auto& o : pe.pieces().front().outputs) {
      AffineExpr e = o.substitute(a->index, n);
      e.normalize();
      outs.push_back(std::move(e));
    }
    std::vector<MapPiece> pieces;
    for (const auto& c : st.domain.pieces()) pieces.push_back({c, outs});
    IntMap m(st.domain.space(), fp.grid.space(), std::move(pieces));
    bool inside = true;
    const IntSet field_set = s.field(a->field).indexset();
    for (const auto& p : sp.instances[stmt])
      if (!field_set.contains(a->element(p))) {
        inside = false;
        break;
      }
    if (inside && equal(m, exact)) return m;
  }
  return exact;
}

std::string dump_placements(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp) {
  std::string out;
  for (std::size_t k = 0; k < fp.fields.size(); ++k) out += "pi " + fp.fields[k] + " = " + to_string(fp.pi[k]) + "\n";
  for (std::size_t k = 0; k < d.scop.statements.size(); ++k)
    out += "pi " + d.scop.statements[k].id + " = " + to_string(symbolic_placement(d, fp, sp, k)) + "\n";
  return out;
}

}  // namespace polycomm
