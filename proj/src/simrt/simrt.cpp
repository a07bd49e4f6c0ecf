#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "polycomm/error.hpp"
#include "polycomm/simrt.hpp"

namespace polycomm {

const char* to_string(ChannelState s) {
  switch (s) {
    case ChannelState::Ready: return "ready";
    case ChannelState::Filling: return "filling";
    case ChannelState::InFlight: return "in_flight";
    case ChannelState::Delivered: return "delivered";
    case ChannelState::Draining: return "draining";
  }
  return "?";
}

std::string Trace::text(const Grid& grid) const {
  std::ostringstream out;
  char digest[17];
  for (const auto& e : entries) {
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(e.digest));
    out << "step=" << e.step << " node=" << to_string(grid.node(e.node)) << " kind=" << to_string(e.kind)
        << " chunk=" << e.chunk << " channel=" << e.channel << " digest=" << digest << "\n";
  }
  return out.str();
}

namespace {

std::uint64_t fnv1a(const std::vector<Value>& values) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& v : values) {
    for (char c : value_text(v) + ";") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

Value zero_of(ElemType t) {
  switch (t) {
    case ElemType::Bool: return false;
    case ElemType::Int64: return std::int64_t{0};
    case ElemType::Float64: return 0.0;
  }
  return false;
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorKind::BufferStateViolation, what); }

}  // namespace

Simulator::Simulator(const Scop& scop, const CommPlan& plan, const Grid& grid, const FieldContents& init)
    : scop_(scop), plan_(plan) {
  if (grid.extents != plan.grid.extents)
    throw Error(ErrorKind::GeometryMismatch,
                "plan was built for grid " + grid_text(plan.grid) + ", runtime grid is " + grid_text(grid));
  fp_ = block_distribute(scop.fields, grid);
  nodes_.resize(grid.size());
  if (plan.nodes.size() != nodes_.size()) throw Error(ErrorKind::GeometryMismatch, "plan node count differs");
  for (auto& n : nodes_) {
    n.homes.resize(scop.fields.size());
    n.storage.resize(scop.fields.size());
  }
  for (std::size_t f = 0; f < scop.fields.size(); ++f) {
    const FieldData& data = init.field(scop.fields[f].name);
    for (const auto& e : scop.fields[f].indexset().enumerate())
      for (auto n : fp_.homes(scop.fields[f].name, e)) {
        nodes_[n].homes[f].push_back(e);
        nodes_[n].storage[f].push_back(data.at(e));
      }
  }
  for (const auto& c : plan.channels) {
    ChannelRt rt;
    rt.send.assign(static_cast<std::size_t>(c.capacity), zero_of(c.type));
    rt.recv = rt.send;
    channels_.push_back(std::move(rt));
  }
}

std::size_t Simulator::field_slot(std::string_view field) const {
  for (std::size_t f = 0; f < scop_.fields.size(); ++f)
    if (scop_.fields[f].name == field) return f;
  throw Error(ErrorKind::ValidationError, "unknown field '" + std::string(field) + "'");
}

Value& Simulator::home_value(std::size_t node, std::size_t field, std::span<const std::int64_t> index) {
  const auto& homes = nodes_.at(node).homes[field];
  auto it = std::lower_bound(homes.begin(), homes.end(), Point(index.begin(), index.end()));
  if (it == homes.end() || !std::equal(it->begin(), it->end(), index.begin(), index.end()))
    throw Error(ErrorKind::NotLocal, scop_.fields[field].name + to_string(index) + " is not stored on node " +
                                         to_string(plan_.grid.node(node)));
  return nodes_[node].storage[field][static_cast<std::size_t>(it - homes.begin())];
}

std::int64_t Simulator::local_rank(std::size_t node, std::string_view field, std::span<const std::int64_t> index) const {
  const auto& homes = nodes_.at(node).homes[field_slot(field)];
  auto it = std::lower_bound(homes.begin(), homes.end(), Point(index.begin(), index.end()));
  if (it == homes.end() || !std::equal(it->begin(), it->end(), index.begin(), index.end()))
    throw Error(ErrorKind::NotLocal,
                std::string(field) + to_string(index) + " is not stored on node " + to_string(plan_.grid.node(node)));
  return it - homes.begin();
}

std::size_t Simulator::local_count(std::size_t node, std::string_view field) const {
  return nodes_.at(node).homes[field_slot(field)].size();
}

Value Simulator::value_load(std::string_view field, std::span<const std::int64_t> index) const {
  const std::size_t f = field_slot(field);
  if (index.size() != scop_.fields[f].arity() || !scop_.fields[f].index_box().contains(index))
    throw Error(ErrorKind::IndexOutOfBounds, std::string(field) + to_string(index) + " is outside the field");
  const std::size_t home = fp_.homes(field, index).front();
  return const_cast<Simulator*>(this)->home_value(home, f, index);
}

void Simulator::value_store(std::string_view field, std::span<const std::int64_t> index, const Value& v) {
  const std::size_t f = field_slot(field);
  if (index.size() != scop_.fields[f].arity() || !scop_.fields[f].index_box().contains(index))
    throw Error(ErrorKind::IndexOutOfBounds, std::string(field) + to_string(index) + " is outside the field");
  const Value c = convert(v, scop_.fields[f].type);
  for (auto n : fp_.homes(field, index)) home_value(n, f, index) = c;
}

FieldContents Simulator::contents() const {
  FieldContents out = FieldContents::zeros(scop_);
  for (std::size_t f = 0; f < scop_.fields.size(); ++f) {
    FieldData& data = out.fields[f];
    for (const auto& e : scop_.fields[f].indexset().enumerate()) data.at(e) = value_load(scop_.fields[f].name, e);
  }
  return out;
}

void Simulator::record(std::size_t node, const Event& e, const std::vector<Value>& buffer) {
  trace_.entries.push_back({step_, node, e.kind, e.chunk, plan_.messages[e.chunk].channel, fnv1a(buffer)});
}

void Simulator::advance_channels() {
  for (auto& c : channels_) {
    if (c.since >= step_) continue;
    if (c.state == ChannelState::InFlight) {
      c.recv = c.send;
      c.state = ChannelState::Delivered;
    } else if (c.state == ChannelState::Draining) {
      c.state = ChannelState::Ready;
    }
  }
}

void Simulator::compute(std::size_t node, const Event& e) {
  const Statement& st = scop_.statements.at(e.stmt);
  auto readable = [&](const BufferRef& r) -> const Value& {
    ChannelRt& c = channels_.at(r.channel);
    if (c.state != ChannelState::Delivered || !c.acquired)
      violation("read from channel " + std::to_string(r.channel) + " in state " + to_string(c.state));
    if (r.rank < 0 || static_cast<std::size_t>(r.rank) >= c.recv.size()) violation("buffer rank out of range");
    return c.recv[static_cast<std::size_t>(r.rank)];
  };
  auto writable = [&](const BufferRef& r) -> Value& {
    ChannelRt& c = channels_.at(r.channel);
    if (c.state != ChannelState::Filling)
      violation("write to channel " + std::to_string(r.channel) + " in state " + to_string(c.state));
    if (r.rank < 0 || static_cast<std::size_t>(r.rank) >= c.send.size()) violation("buffer rank out of range");
    return c.send[static_cast<std::size_t>(r.rank)];
  };

  if (st.role == Statement::Role::Prologue) {
    for (const auto& m : e.moves) writable(m.buffer) = home_value(node, field_slot(m.field), m.element);
    return;
  }
  if (st.role == Statement::Role::Epilogue) {
    for (const auto& m : e.moves) home_value(node, field_slot(m.field), m.element) = readable(m.buffer);
    return;
  }
  NodeRt& n = nodes_[node];
  auto read = [&](std::size_t k) -> Value {
    for (const auto& [access, ref] : e.reads)
      if (access == k) return readable(ref);
    violation(st.id + to_string(e.instance) + " has no buffer for access @" + std::to_string(k));
  };
  std::map<std::size_t, Value> stored;
  for (const auto& act : st.body) {
    Value v = evaluate(act.value, scop_, n.scalars, read);
    if (act.kind == Action::Kind::Let)
      n.scalars[act.target] = v;
    else
      stored[act.access] = convert(v, scop_.field(st.accesses.at(act.access).field).type);
  }
  for (const auto& [access, ref] : e.writes) {
    auto it = stored.find(access);
    if (it == stored.end()) violation(st.id + to_string(e.instance) + " never stores access @" + std::to_string(access));
    writable(ref) = it->second;
  }
}

bool Simulator::try_execute(std::size_t node, const Event& e) {
  if (e.kind == EventKind::Compute) {
    compute(node, e);
    return true;
  }
  const std::size_t ch = plan_.messages.at(e.chunk).channel;
  ChannelRt& c = channels_.at(ch);
  const std::string where = " (channel " + std::to_string(ch) + ", chunk " + std::to_string(e.chunk) + ")";
  switch (e.kind) {
    case EventKind::SendWait:
      if (c.state == ChannelState::Filling) violation("send_wait on a channel that is already filling" + where);
      if (c.state != ChannelState::Ready) return false;
      c.state = ChannelState::Filling;
      c.chunk = e.chunk;
      record(node, e, c.send);
      return true;
    case EventKind::Send:
      if (c.state != ChannelState::Filling || c.chunk != e.chunk) violation("send without send_wait" + where);
      c.state = ChannelState::InFlight;
      c.since = step_;
      record(node, e, c.send);
      return true;
    case EventKind::RecvWait:
      if (c.state == ChannelState::Delivered && c.chunk != e.chunk) violation("message arrived out of order" + where);
      if (c.state != ChannelState::Delivered || c.acquired) return false;
      c.acquired = true;
      record(node, e, c.recv);
      return true;
    case EventKind::Recv:
      if (c.state != ChannelState::Delivered || !c.acquired || c.chunk != e.chunk)
        violation("recv without matching recv_wait" + where);
      c.state = ChannelState::Draining;
      c.acquired = false;
      c.since = step_;
      record(node, e, c.recv);
      return true;
    case EventKind::Compute: break;
  }
  return true;
}

void Simulator::run() {
  if (finished_) return;
  std::vector<Point> timeline;
  for (const auto& np : plan_.nodes)
    for (const auto& e : np.events) timeline.push_back(e.time);
  std::sort(timeline.begin(), timeline.end());
  timeline.erase(std::unique(timeline.begin(), timeline.end()), timeline.end());

  for (const auto& t : timeline) {
    for (;;) {
      ++step_;
      advance_channels();
      bool progress = false, done = true;
      for (std::size_t n = 0; n < nodes_.size(); ++n) {
        const auto& events = plan_.nodes[n].events;
        std::size_t& cur = nodes_[n].cursor;
        while (cur < events.size() && events[cur].time == t && try_execute(n, events[cur])) {
          ++cur;
          progress = true;
        }
        if (cur < events.size() && events[cur].time == t) done = false;
      }
      if (done) break;
      const bool pending = std::any_of(channels_.begin(), channels_.end(), [](const ChannelRt& c) {
        return c.state == ChannelState::InFlight || c.state == ChannelState::Draining;
      });
      if (!progress && !pending) {
        std::string blocked;
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
          const auto& events = plan_.nodes[n].events;
          const std::size_t cur = nodes_[n].cursor;
          if (cur < events.size() && events[cur].time == t)
            blocked += " " + to_string(plan_.grid.node(n)) + ":" + to_string(events[cur].kind) + "#" +
                       std::to_string(events[cur].chunk);
        }
        throw Error(ErrorKind::DeadlockDetected, "every node is blocked at t=" + to_string(t) + ":" + blocked);
      }
    }
  }
  // Let the last releases settle, then every buffer must be back to ready.
  ++step_;
  advance_channels();
  for (std::size_t k = 0; k < channels_.size(); ++k)
    if (channels_[k].state != ChannelState::Ready)
      violation("channel " + std::to_string(k) + " left in state " + to_string(channels_[k].state));
  finished_ = true;
}

FieldContents simulate(const Scop& scop, const CommPlan& plan, const FieldContents& init, Trace* trace) {
  Simulator sim(scop, plan, plan.grid, init);
  sim.run();
  if (trace) *trace = sim.trace();
  return sim.contents();
}

}  // namespace polycomm
