#pragma once

// Chunking functions: which consumer instances share one message.

#include <optional>
#include <string>
#include <vector>

#include "polycomm/deps.hpp"

namespace polycomm {

struct ChunkingFn {
  std::size_t family = 0;  // index into DepGraph::families
  std::size_t stmt = 0;    // statement whose instances are collapsed
  /// Scatter prefix length; nullopt is the identity fallback.
  std::optional<std::size_t> level;
  std::vector<bool> kept;  // per domain dim of `stmt`
  IntMap map;              // stmt -> stmt, instance -> representative

  Point representative(std::span<const std::int64_t> instance) const;
  /// True when every domain dim is kept, i.e. one chunk per instance.
  bool is_identity() const;
};

/// Domain dims of `st` that appear in the first `level` scatter dims.
std::vector<bool> dims_in_prefix(const Statement& st, std::size_t level);

/// phi at a fixed level for the consumer of a family.
ChunkingFn chunking_at(const DepGraph& d, std::size_t family, std::optional<std::size_t> level);

/// (1) every producer's scatter prefix is lexicographically before its
/// consumer's (at level 0: every producer runs before every consumer),
/// (2) collapsing by phi keeps the flow graph acyclic.
std::pair<bool, bool> chunk_conditions(const DepGraph& d, std::size_t family, std::size_t level);

/// Smallest level satisfying both conditions, identity if none does.
/// Prologue and epilogue families get a single chunk.
ChunkingFn chunk_heuristic(const DepGraph& d, std::size_t family);

/// No (S, i) -> (S, i) pair in the transitive closure of the flows after
/// applying phi to both ends.
bool validate_chunking(const ChunkingFn& phi, const DepGraph& d);

/// One per Field, Input and Output family, in family order.
std::vector<ChunkingFn> compute_chunkings(const DepGraph& d);

/// Distinct representatives over the consumers that occur in the family.
std::size_t chunk_count(const ChunkingFn& phi, const DepGraph& d);

std::string dump_chunkings(const DepGraph& d, const std::vector<ChunkingFn>& chunks);

}  // namespace polycomm
