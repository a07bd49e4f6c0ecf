#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "polycomm/chunking.hpp"
#include "polycomm/error.hpp"

namespace polycomm {

namespace {

bool mentions_dim(const AffineExpr& e, std::size_t k) {
  if (k < e.coeffs.size() && e.coeffs[k] != 0) return true;
  for (const auto& f : e.floors)
    if (f.coeff != 0 && mentions_dim(f.inner, k)) return true;
  return false;
}

// Every instance of every statement, numbered consecutively, with the flow
// edges between them.
struct FlowGraph {
  std::vector<std::vector<Point>> instances;
  std::vector<std::size_t> offset;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t size = 0;

  explicit FlowGraph(const DepGraph& d) {
    for (const auto& st : d.scop.statements) {
      offset.push_back(size);
      instances.push_back(st.domain.enumerate());
      size += instances.back().size();
    }
    for (const auto& fam : d.families)
      for (const auto& e : fam.edges)
        edges.emplace_back(id(fam.producer, e.producer), id(fam.consumer, e.consumer));
  }

  std::size_t id(std::size_t stmt, const Point& p) const {
    const auto& v = instances[stmt];
    auto it = std::lower_bound(v.begin(), v.end(), p);
    return offset[stmt] + static_cast<std::size_t>(it - v.begin());
  }
};

bool acyclic_after(const FlowGraph& g, const ChunkingFn& phi) {
  std::vector<std::size_t> node(g.size);
  for (std::size_t k = 0; k < g.size; ++k) node[k] = k;
  std::map<Point, std::size_t> reps;
  const auto& inst = g.instances[phi.stmt];
  for (std::size_t j = 0; j < inst.size(); ++j) {
    auto [it, fresh] = reps.try_emplace(phi.representative(inst[j]), g.size + reps.size());
    node[g.offset[phi.stmt] + j] = it->second;
  }
  const std::size_t n = g.size + reps.size();
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [u, v] : g.edges) {
    const std::size_t a = node[u], b = node[v];
    if (a == b) return false;
    succ[a].push_back(b);
    ++indegree[b];
  }
  std::queue<std::size_t> ready;
  for (std::size_t k = 0; k < n; ++k)
    if (indegree[k] == 0) ready.push(k);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const std::size_t u = ready.front();
    ready.pop();
    ++seen;
    for (auto v : succ[u])
      if (--indegree[v] == 0) ready.push(v);
  }
  return seen == n;
}

bool single_chunk(const FlowFamily& f) { return f.kind == FlowKind::Input || f.kind == FlowKind::Output; }

}  // namespace

Point ChunkingFn::representative(std::span<const std::int64_t> instance) const {
  Point r(instance.begin(), instance.end());
  for (std::size_t k = 0; k < r.size(); ++k)
    if (!kept[k]) r[k] = 0;
  return r;
}

bool ChunkingFn::is_identity() const { return std::all_of(kept.begin(), kept.end(), [](bool b) { return b; }); }

std::vector<bool> dims_in_prefix(const Statement& st, std::size_t level) {
  std::vector<bool> kept(st.domain.arity(), false);
  for (const auto& piece : st.schedule.pieces())
    for (std::size_t o = 0; o < std::min(level, piece.outputs.size()); ++o)
      for (std::size_t k = 0; k < kept.size(); ++k)
        if (mentions_dim(piece.outputs[o], k)) kept[k] = true;
  return kept;
}

ChunkingFn chunking_at(const DepGraph& d, std::size_t family, std::optional<std::size_t> level) {
  const FlowFamily& f = d.families.at(family);
  if (f.kind == FlowKind::Scalar) throw Error(ErrorKind::ValidationError, "scalar flows are not chunked");
  ChunkingFn phi;
  phi.family = family;
  phi.level = level;
  phi.stmt = f.kind == FlowKind::Input ? f.producer : f.consumer;
  const Statement& st = d.scop.statements[phi.stmt];
  phi.kept = level ? dims_in_prefix(st, *level) : std::vector<bool>(st.domain.arity(), true);
  std::vector<AffineExpr> outs;
  for (std::size_t k = 0; k < phi.kept.size(); ++k)
    outs.push_back(phi.kept[k] ? AffineExpr::var(phi.kept.size(), k) : AffineExpr(phi.kept.size()));
  phi.map = IntMap(st.domain.space(), st.domain.space(), {MapPiece{{}, outs}});
  return phi;
}

std::pair<bool, bool> chunk_conditions(const DepGraph& d, std::size_t family, std::size_t level) {
  const FlowFamily& f = d.families.at(family);
  const Statement& gen = d.scop.statements[f.producer];
  const Statement& con = d.scop.statements[f.consumer];
  bool ordered = true;
  if (level == 0) {
    // The whole SCoP is one chunk: every generator before every consumer.
    std::optional<Point> last_gen, first_con;
    for (const auto& e : f.edges) {
      Point tg = gen.time(e.producer), tc = con.time(e.consumer);
      if (!last_gen || *last_gen < tg) last_gen = std::move(tg);
      if (!first_con || tc < *first_con) first_con = std::move(tc);
    }
    ordered = !last_gen || *last_gen < *first_con;
  } else {
    for (const auto& e : f.edges)
      if (!lex_lt_prefix(gen.time(e.producer), con.time(e.consumer), level)) {
        ordered = false;
        break;
      }
  }
  return {ordered, validate_chunking(chunking_at(d, family, level), d)};
}

ChunkingFn chunk_heuristic(const DepGraph& d, std::size_t family) {
  const FlowFamily& f = d.families.at(family);
  if (single_chunk(f)) return chunking_at(d, family, 0);
  for (std::size_t l = 0; l <= d.scop.scatter_arity; ++l) {
    auto [ordered, acyclic] = chunk_conditions(d, family, l);
    if (ordered && acyclic) return chunking_at(d, family, l);
  }
  return chunking_at(d, family, std::nullopt);
}

bool validate_chunking(const ChunkingFn& phi, const DepGraph& d) { return acyclic_after(FlowGraph(d), phi); }

std::vector<ChunkingFn> compute_chunkings(const DepGraph& d) {
  std::vector<ChunkingFn> out;
  for (std::size_t k = 0; k < d.families.size(); ++k)
    if (d.families[k].kind != FlowKind::Scalar) out.push_back(chunk_heuristic(d, k));
  return out;
}

std::size_t chunk_count(const ChunkingFn& phi, const DepGraph& d) {
  const FlowFamily& f = d.families.at(phi.family);
  if (single_chunk(f)) return f.edges.empty() ? 0 : 1;
  std::set<Point> reps;
  for (const auto& e : f.edges) reps.insert(phi.representative(e.consumer));
  return reps.size();
}

std::string dump_chunkings(const DepGraph& d, const std::vector<ChunkingFn>& chunks) {
  std::string out;
  for (const auto& phi : chunks) {
    const FlowFamily& f = d.families[phi.family];
    out += "chunk " + d.scop.statements[f.consumer].id + " from " + d.scop.statements[f.producer].id + " " +
           f.carrier + " level=" + (phi.level ? std::to_string(*phi.level) : "identity") +
           " phi=" + to_string(phi.map) + "\n";
  }
  return out;
}

}  // namespace polycomm
