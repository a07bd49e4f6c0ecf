#include <algorithm>
#include <map>
#include <tuple>

#include "polycomm/deps.hpp"
#include "polycomm/error.hpp"

namespace polycomm {

const char* to_string(FlowKind k) {
  switch (k) {
    case FlowKind::Field: return "field";
    case FlowKind::Input: return "input";
    case FlowKind::Output: return "output";
    case FlowKind::Scalar: return "scalar";
    case FlowKind::Passthrough: return "passthrough";
  }
  return "?";
}

std::vector<const FlowFamily*> DepGraph::of_kind(FlowKind k) const {
  std::vector<const FlowFamily*> out;
  for (const auto& f : families)
    if (f.kind == k) out.push_back(&f);
  return out;
}

namespace {

Statement virtual_statement(const std::string& id, Statement::Role role, std::size_t scatter_arity,
                            std::int64_t leading) {
  Statement st;
  st.id = id;
  st.role = role;
  Space space(id, {});
  st.domain = IntSet(space, {Conjunction{}});
  std::vector<AffineExpr> outs(scatter_arity, AffineExpr(0));
  outs.front().constant = leading;
  st.schedule = IntMap(space, Space::anonymous(scatter_arity), {MapPiece{{}, outs}});
  return st;
}

struct Writer {
  std::size_t stmt;
  Point point;
};

using FamilyKey = std::tuple<int, std::size_t, std::size_t, std::size_t, std::string>;

std::string tuple_text(const std::string& name, const std::vector<std::string>& entries) {
  std::string out = name + "[";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    std::string e = entries[k];
    e.erase(std::remove(e.begin(), e.end(), ' '), e.end());
    out += (k ? "," : "") + e;
  }
  return out + "]";
}

}  // namespace

Scop add_virtual_statements(const Scop& s) {
  if (s.scatter_arity == 0) throw Error(ErrorKind::ValidationError, "scatter_arity must be >= 1");
  std::int64_t lo = 0, hi = 0;
  bool any = false;
  for (const auto& st : s.statements) {
    for (const auto& p : st.domain.enumerate()) {
      const std::int64_t lead = st.time(p).front();
      lo = any ? std::min(lo, lead) : lead;
      hi = any ? std::max(hi, lead) : lead;
      any = true;
    }
  }
  Scop out = s;
  out.statements.push_back(virtual_statement(kPrologue, Statement::Role::Prologue, s.scatter_arity, lo - 1));
  out.statements.push_back(virtual_statement(kEpilogue, Statement::Role::Epilogue, s.scatter_arity, hi + 1));
  return out;
}

DepGraph compute_flow(const Scop& s) {
  for (const auto& st : s.statements)
    if (st.role != Statement::Role::Normal)
      throw Error(ErrorKind::ValidationError, "compute_flow expects a SCoP without virtual statements");
  DepGraph g;
  g.scop = add_virtual_statements(s);
  g.prologue = g.scop.statements.size() - 2;
  g.epilogue = g.scop.statements.size() - 1;
  const Scop& v = g.scop;

  std::map<std::string, std::vector<std::optional<Writer>>> last_field;
  for (const auto& f : v.fields) last_field[f.name].assign(static_cast<std::size_t>(f.size()), std::nullopt);
  std::map<std::string, Writer> last_scalar;
  std::map<FamilyKey, FlowFamily> fams;

  auto add = [&](FlowKind kind, std::size_t producer, std::size_t consumer, std::size_t access,
                 const std::string& carrier, FlowEdge edge) {
    FamilyKey key{static_cast<int>(kind), consumer, access, producer, carrier};
    auto [it, fresh] = fams.try_emplace(key);
    if (fresh) {
      it->second.kind = kind;
      it->second.producer = producer;
      it->second.consumer = consumer;
      it->second.access = access;
      it->second.carrier = carrier;
    }
    it->second.edges.push_back(std::move(edge));
  };

  for (const auto& inst : schedule_order(s)) {
    const Statement& st = v.statements[inst.stmt];
    for (const auto& name : st.scalar_reads) {
      auto it = last_scalar.find(name);
      if (it == last_scalar.end())
        throw Error(ErrorKind::UncoveredRead, "scalar '" + name + "' read by " + st.id + to_string(inst.point) +
                                                  " has no earlier writer");
      add(FlowKind::Scalar, it->second.stmt, inst.stmt, 0, name, {it->second.point, inst.point, {}});
    }
    for (std::size_t k = 0; k < st.accesses.size(); ++k) {
      const AccessRef& a = st.accesses[k];
      if (a.kind != AccessKind::Read) continue;
      const FieldDecl& f = v.field(a.field);
      Point e = a.element(inst.point);
      const auto& w = last_field[a.field][static_cast<std::size_t>(f.index_box().rank(e))];
      if (w)
        add(FlowKind::Field, w->stmt, inst.stmt, k, a.field, {w->point, inst.point, e});
      else
        add(FlowKind::Input, g.prologue, inst.stmt, k, a.field, {{}, inst.point, e});
    }
    for (const auto& a : st.accesses) {
      if (a.kind != AccessKind::Write) continue;
      const FieldDecl& f = v.field(a.field);
      last_field[a.field][static_cast<std::size_t>(f.index_box().rank(a.element(inst.point)))] =
          Writer{inst.stmt, inst.point};
    }
    for (const auto& name : st.scalar_writes) last_scalar[name] = Writer{inst.stmt, inst.point};
  }
  for (const auto& f : v.fields) {
    const Box b = f.index_box();
    const auto& writers = last_field[f.name];
    for (const auto& e : f.indexset().enumerate()) {
      const auto& w = writers[static_cast<std::size_t>(b.rank(e))];
      if (w)
        add(FlowKind::Output, w->stmt, g.epilogue, 0, f.name, {w->point, {}, e});
      else
        add(FlowKind::Passthrough, g.prologue, g.epilogue, 0, f.name, {{}, {}, e});
    }
  }

  for (auto& [key, fam] : fams) {
    std::sort(fam.edges.begin(), fam.edges.end(), [](const FlowEdge& a, const FlowEdge& b) {
      return std::tie(a.consumer, a.producer, a.element) < std::tie(b.consumer, b.producer, b.element);
    });
    const Space& ps = v.statements[fam.producer].domain.space();
    const Space& cs = v.statements[fam.consumer].domain.space();
    std::vector<PointPair> pairs;
    if (fam.kind == FlowKind::Output) {
      for (const auto& e : fam.edges) pairs.emplace_back(e.producer, e.consumer);
      fam.relation = IntMap::from_pairs(ps, cs, std::move(pairs));
    } else {
      for (const auto& e : fam.edges) pairs.emplace_back(e.consumer, e.producer);
      fam.relation = IntMap::from_pairs(cs, ps, std::move(pairs));
    }
    (fam.kind == FlowKind::Passthrough ? g.dropped : g.families).push_back(std::move(fam));
  }
  return g;
}

std::string family_text(const DepGraph& g, const FlowFamily& f) {
  const Space& ps = g.scop.statements[f.producer].domain.space();
  const Space& cs = g.scop.statements[f.consumer].domain.space();
  const bool by_producer = f.kind == FlowKind::Output;
  const Space& keyed = by_producer ? ps : cs;
  std::vector<std::pair<std::vector<AffineExpr>, std::vector<const Conjunction*>>> groups;
  for (const auto& piece : f.relation.pieces()) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& gr) { return gr.first == piece.outputs; });
    if (it == groups.end()) {
      groups.push_back({piece.outputs, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&piece.guard);
  }
  std::string out = std::string(to_string(f.kind)) + " " + f.carrier + " { ";
  for (std::size_t k = 0; k < groups.size(); ++k) {
    std::vector<std::string> exprs;
    for (const auto& e : groups[k].first) exprs.push_back(to_string(e, keyed.dims));
    const std::string key_tuple = tuple_text(keyed.name, keyed.dims);
    const std::string other = tuple_text(by_producer ? cs.name : ps.name, exprs);
    out += (k ? "; " : "") + (by_producer ? key_tuple + " -> " + other : other + " -> " + key_tuple);
    std::string guard;
    bool universe = false;
    for (const Conjunction* c : groups[k].second) {
      if (c->empty()) universe = true;
      const std::string t = to_string(*c, keyed.dims);
      guard += (guard.empty() ? "" : " or ") +
               (groups[k].second.size() > 1 && t.find(" and ") != std::string::npos ? "(" + t + ")" : t);
    }
    if (!universe) out += " : " + guard;
  }
  return out + " }";
}

std::string dump_deps(const DepGraph& g) {
  std::string out;
  for (FlowKind k : {FlowKind::Field, FlowKind::Input, FlowKind::Output, FlowKind::Scalar})
    for (const FlowFamily* f : g.of_kind(k)) out += family_text(g, *f) + "\n";
  return out;
}

}  // namespace polycomm
