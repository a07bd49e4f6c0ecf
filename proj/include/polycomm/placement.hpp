#pragma once

// Home locations of field elements (block distribution) and execution nodes
// of statement instances (owner computes, scalar co-location).

#include <string>
#include <vector>

#include "polycomm/deps.hpp"
#include "polycomm/iset.hpp"

namespace polycomm {

/// Node coordinates on a rectangular grid, numbered row-major.
struct Grid {
  std::vector<std::int64_t> extents;

  std::size_t arity() const { return extents.size(); }
  std::size_t size() const;
  Box box() const;
  Point node(std::size_t id) const;
  std::size_t id(std::span<const std::int64_t> node) const;
  Space space() const { return Space::anonymous(extents.size(), "P"); }
};

struct FieldPlacement {
  Grid grid;
  std::vector<std::string> fields;
  std::vector<IntMap> pi;                          // field index -> node, per field
  std::vector<std::vector<std::int64_t>> blocks;   // block extents, per field

  const IntMap& of(std::string_view field) const;
  const std::vector<std::int64_t>& block(std::string_view field) const;
  /// Home nodes (ids, ascending) of one element.
  std::vector<std::size_t> homes(std::string_view field, std::span<const std::int64_t> element) const;
};

/// pi_e(k) = (floor(k_d / B_d))_d with B_d = extent_d / grid_d.
FieldPlacement block_distribute(const std::vector<FieldDecl>& fields, const Grid& grid);

using NodeSet = std::vector<std::size_t>;  // ascending node ids

struct StmtPlacement {
  Grid grid;
  /// Per statement, per instance (in domain enumeration order).
  std::vector<std::vector<Point>> instances;
  std::vector<std::vector<NodeSet>> nodes;

  const NodeSet& at(std::size_t stmt, std::span<const std::int64_t> instance) const;
  NodeSet& at(std::size_t stmt, std::span<const std::int64_t> instance);
  /// pi_S as an exact relation from the statement's domain to the grid.
  IntMap relation(const Scop& s, std::size_t stmt) const;

  bool operator==(const StmtPlacement& o) const { return nodes == o.nodes; }
};

/// Owner computes for every field write, scalar producers widened to cover
/// their consumers, prologue readers seeded at the element's home and the
/// rest adopting a neighbour's lexmin node. Starting from `seed` (if any)
/// only adds nodes, so placing a finished placement again is the identity.
StmtPlacement place_statements(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement* seed = nullptr);

/// `pi S = { ... }` lines; each map is printed as pi_e o lambda of some
/// access when that form is exact.
std::string dump_placements(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp);
/// Symbolic pi_S, preferring a composed field placement when it matches.
IntMap symbolic_placement(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp, std::size_t stmt);

Grid parse_grid(std::string_view text);  // "2x2"
std::string grid_text(const Grid& g);

}  // namespace polycomm
