#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "polycomm/commgen.hpp"
#include "polycomm/error.hpp"

namespace polycomm {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Send: return "send";
    case EventKind::Recv: return "recv";
    case EventKind::SendWait: return "send_wait";
    case EventKind::RecvWait: return "recv_wait";
    case EventKind::Compute: return "compute";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  for (EventKind k : {EventKind::Send, EventKind::Recv, EventKind::SendWait, EventKind::RecvWait, EventKind::Compute})
    if (text == to_string(k)) return k;
  throw Error(ErrorKind::ParseError, "unknown event kind '" + std::string(text) + "'");
}

std::int64_t Message::rank(std::span<const std::int64_t> element) const {
  if (element.size() != hull.arity() || !hull.contains(element))
    throw Error(ErrorKind::OutOfHull, "element " + to_string(element) + " outside buffer hull");
  return hull.rank(element);
}

Point dilated_time(const Statement& st, std::span<const std::int64_t> instance) {
  Point t = st.time(instance);
  for (auto& v : t) v *= 2;
  return t;
}

namespace {

Point shifted(Point t, std::int64_t delta) {
  t.back() += delta;
  return t;
}

std::size_t write_access_for(const Statement& st, const std::string& field, const Point& inst, const Point& element) {
  for (std::size_t k = 0; k < st.accesses.size(); ++k) {
    const AccessRef& a = st.accesses[k];
    if (a.kind == AccessKind::Write && a.field == field && a.element(inst) == element) return k;
  }
  throw Error(ErrorKind::ValidationError, st.id + to_string(inst) + " does not write " + field + to_string(element));
}

}  // namespace

std::vector<Transfer> build_transfers(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp,
                                      const std::vector<ChunkingFn>& chunks) {
  std::vector<Transfer> out;
  for (const auto& phi : chunks) {
    const FlowFamily& f = d.families.at(phi.family);
    const bool collapse_consumer = phi.stmt == f.consumer;
    for (const auto& e : f.edges) {
      const NodeSet cons = f.kind == FlowKind::Output ? fp.homes(f.carrier, e.element) : sp.at(f.consumer, e.consumer);
      const NodeSet prod = f.kind == FlowKind::Input ? fp.homes(f.carrier, e.element) : sp.at(f.producer, e.producer);
      const Point rep = phi.representative(collapse_consumer ? e.consumer : e.producer);
      for (auto dst : cons) {
        const std::size_t src = std::binary_search(prod.begin(), prod.end(), dst) ? dst : prod.front();
        out.push_back({phi.family, rep, e.producer, e.consumer, src, dst, e.element});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CommPlan emit_protocol(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp,
                       const std::vector<Transfer>& transfers) {
  const Scop& s = d.scop;
  CommPlan plan;
  plan.grid = fp.grid;
  plan.arity = s.scatter_arity;

  struct Build {
    std::set<Point> elements;
    Point first_prod, last_prod, first_cons, last_cons;
    bool any = false;
  };
  using MsgKey = std::tuple<std::size_t, Point, std::size_t, std::size_t>;  // family, rep, src, dst
  std::map<MsgKey, Build> builds;
  for (const auto& t : transfers) {
    const FlowFamily& f = d.families[t.family];
    Build& b = builds[{t.family, t.representative, t.src, t.dst}];
    const Point tp = dilated_time(s.statements[f.producer], t.producer);
    const Point tc = dilated_time(s.statements[f.consumer], t.consumer);
    if (!b.any) {
      b.first_prod = b.last_prod = tp;
      b.first_cons = b.last_cons = tc;
      b.any = true;
    }
    b.first_prod = std::min(b.first_prod, tp);
    b.last_prod = std::max(b.last_prod, tp);
    b.first_cons = std::min(b.first_cons, tc);
    b.last_cons = std::max(b.last_cons, tc);
    b.elements.insert(t.element);
  }

  // Buffers of one (family, src, dst) are reused by chunks whose lifetimes
  // (send_wait .. recv) do not overlap.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::pair<Point, std::size_t>>> lanes;
  std::vector<std::size_t> slot_of;
  std::vector<MsgKey> keys;
  for (const auto& [key, b] : builds) keys.push_back(key);
  std::vector<std::size_t> order(keys.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::vector<const Build*> build_of;
  for (const auto& key : keys) build_of.push_back(&builds.at(key));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return build_of[a]->first_prod < build_of[b]->first_prod; });
  slot_of.assign(keys.size(), 0);
  for (std::size_t m : order) {
    const auto& [fam, rep, src, dst] = keys[m];
    auto& slots = lanes[{fam, src, dst}];  // per slot: last recv time, count
    const Point start = shifted(build_of[m]->first_prod, -1);
    const Point end = shifted(build_of[m]->last_cons, +1);
    std::size_t slot = slots.size();
    for (std::size_t k = 0; k < slots.size(); ++k)
      if (slots[k].first < start) {
        slot = k;
        break;
      }
    if (slot == slots.size()) slots.push_back({end, 0});
    slots[slot] = {end, slots[slot].second + 1};
    slot_of[m] = slot;
  }

  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, std::size_t> channel_ids;
  for (std::size_t m = 0; m < keys.size(); ++m) {
    const auto& [fam, rep, src, dst] = keys[m];
    channel_ids.try_emplace({fam, src, dst, slot_of[m]}, 0);
  }
  for (auto& [key, id] : channel_ids) {
    id = plan.channels.size();
    Channel c;
    std::tie(c.family, c.src, c.dst, c.slot) = key;
    c.tag = static_cast<std::int64_t>(id);
    c.type = s.field(d.families[c.family].carrier).type;
    plan.channels.push_back(c);
  }
  std::map<MsgKey, std::size_t> message_of;
  for (std::size_t m = 0; m < keys.size(); ++m) {
    const auto& [fam, rep, src, dst] = keys[m];
    Message msg;
    msg.channel = channel_ids.at({fam, src, dst, slot_of[m]});
    msg.representative = rep;
    msg.elements.assign(build_of[m]->elements.begin(), build_of[m]->elements.end());
    msg.hull.lo = msg.hull.hi = msg.elements.front();
    for (const auto& e : msg.elements)
      for (std::size_t k = 0; k < e.size(); ++k) {
        msg.hull.lo[k] = std::min(msg.hull.lo[k], e[k]);
        msg.hull.hi[k] = std::max(msg.hull.hi[k], e[k]);
      }
    Channel& c = plan.channels[msg.channel];
    c.capacity = std::max(c.capacity, msg.size());
    message_of[keys[m]] = plan.messages.size();
    plan.messages.push_back(std::move(msg));
  }

  plan.nodes.resize(fp.grid.size());
  for (std::size_t n = 0; n < plan.nodes.size(); ++n) plan.nodes[n].node = fp.grid.node(n);
  for (std::size_t m = 0; m < keys.size(); ++m) {
    const std::size_t id = message_of.at(keys[m]);
    const Channel& c = plan.channels[plan.messages[id].channel];
    const Build& b = *build_of[m];
    auto comm = [&](std::size_t node, EventKind kind, Point t) {
      Event e;
      e.time = std::move(t);
      e.kind = kind;
      e.chunk = id;
      plan.nodes[node].events.push_back(std::move(e));
    };
    comm(c.src, EventKind::SendWait, shifted(b.first_prod, -1));
    comm(c.src, EventKind::Send, shifted(b.last_prod, +1));
    comm(c.dst, EventKind::RecvWait, shifted(b.first_cons, -1));
    comm(c.dst, EventKind::Recv, shifted(b.last_cons, +1));
  }

  // Buffer references of every compute event.
  using ExecKey = std::tuple<std::size_t, Point, std::size_t>;  // stmt, instance, node
  std::map<ExecKey, std::set<std::pair<std::size_t, BufferRef>>> reads, writes;
  std::map<std::size_t, std::set<std::tuple<std::string, Point, BufferRef>>> loads, stores;  // per node
  for (const auto& t : transfers) {
    const FlowFamily& f = d.families[t.family];
    const std::size_t id = message_of.at({t.family, t.representative, t.src, t.dst});
    const BufferRef ref{plan.messages[id].channel, plan.messages[id].rank(t.element)};
    if (f.kind == FlowKind::Input)
      loads[t.src].insert({f.carrier, t.element, ref});
    else
      writes[{f.producer, t.producer, t.src}].insert(
          {write_access_for(s.statements[f.producer], f.carrier, t.producer, t.element), ref});
    if (f.kind == FlowKind::Output)
      stores[t.dst].insert({f.carrier, t.element, ref});
    else
      reads[{f.consumer, t.consumer, t.dst}].insert({f.access, ref});
  }
  for (std::size_t k = 0; k < s.statements.size(); ++k) {
    const Statement& st = s.statements[k];
    for (std::size_t j = 0; j < sp.instances[k].size(); ++j) {
      const Point& inst = sp.instances[k][j];
      for (auto node : sp.nodes[k][j]) {
        Event e;
        e.time = dilated_time(st, inst);
        e.kind = EventKind::Compute;
        e.stmt = k;
        e.instance = inst;
        if (auto it = reads.find({k, inst, node}); it != reads.end()) e.reads.assign(it->second.begin(), it->second.end());
        if (auto it = writes.find({k, inst, node}); it != writes.end())
          e.writes.assign(it->second.begin(), it->second.end());
        const auto* moves = k == d.prologue ? &loads : k == d.epilogue ? &stores : nullptr;
        if (moves)
          if (auto it = moves->find(node); it != moves->end())
            for (const auto& [field, element, ref] : it->second) e.moves.push_back({field, element, ref});
        plan.nodes[node].events.push_back(std::move(e));
      }
    }
  }

  for (auto& np : plan.nodes) {
    std::stable_sort(np.events.begin(), np.events.end(), [](const Event& a, const Event& b) {
      return std::tie(a.time, a.kind, a.chunk) < std::tie(b.time, b.kind, b.chunk);
    });
    for (std::size_t k = 1; k < np.events.size(); ++k) {
      const Event& a = np.events[k - 1];
      const Event& b = np.events[k];
      if (a.time == b.time && (a.kind == EventKind::Compute || b.kind == EventKind::Compute))
        throw Error(ErrorKind::ScatterCollision, "two events at " + to_string(a.time) + " on node " + to_string(np.node));
    }
  }
  return plan;
}

Pipeline run_pipeline(const Scop& isolated, const Grid& grid) {
  Pipeline p;
  p.deps = compute_flow(isolated);
  p.fields = block_distribute(p.deps.scop.fields, grid);
  p.stmts = place_statements(p.deps, p.fields);
  p.chunks = compute_chunkings(p.deps);
  p.transfers = build_transfers(p.deps, p.fields, p.stmts, p.chunks);
  p.plan = emit_protocol(p.deps, p.fields, p.stmts, p.transfers);
  return p;
}

}  // namespace polycomm
