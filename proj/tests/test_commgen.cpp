#include <map>
#include <set>

#include "fixtures.hpp"
#include "pipeline_oracle.hpp"
#include "polycomm/commgen.hpp"

using namespace polycomm;
using namespace fixtures;
using oracle::brute_transfers;

namespace {

Pipeline gol_pipeline(const std::string& grid, const Constants& overrides = {}) {
  return run_pipeline(gol16(overrides), parse_grid(grid));
}

const Channel& channel_of(const CommPlan& plan, const Message& m) { return plan.channels.at(m.channel); }

std::size_t family_index(const DepGraph& d, const std::string& producer, const std::string& consumer) {
  for (std::size_t k = 0; k < d.families.size(); ++k)
    if (d.families[k].kind == FlowKind::Field && d.scop.statements[d.families[k].producer].id == producer &&
        d.scop.statements[d.families[k].consumer].id == consumer)
      return k;
  FAIL("no such family");
  return 0;
}

}  // namespace

TEST_CASE("transfers match a brute-force enumeration") {
  for (const char* grid : {"1x1", "2x2", "4x4"}) {
    const Pipeline p = gol_pipeline(grid);
    const std::set<Transfer> want = brute_transfers(p);
    const std::set<Transfer> got(p.transfers.begin(), p.transfers.end());
    CAPTURE(grid);
    CHECK(got.size() == p.transfers.size());
    CHECK(got == want);
  }
  for (const char* text : {kShiftChain, kStraightLine, kJacobi1D}) {
    const Scop s = isolate_accesses(parse_scop(text));
    const Pipeline p = run_pipeline(s, Grid{s.grid});
    CHECK(std::set<Transfer>(p.transfers.begin(), p.transfers.end()) == brute_transfers(p));
  }
}

TEST_CASE("each value reaches each consumer node from exactly one source") {
  const Pipeline p = gol_pipeline("2x2");
  std::map<std::tuple<std::size_t, Point, Point, std::size_t>, int> seen;
  for (const auto& t : p.transfers) ++seen[{t.family, t.consumer, t.element, t.dst}];
  for (const auto& [key, n] : seen) CHECK(n == 1);
}

TEST_CASE("boundary chunks carry seven elements at block size 8") {
  const Pipeline p = gol_pipeline("2x2");
  std::size_t cross = 0;
  for (const auto& m : p.plan.messages) {
    const Channel& c = channel_of(p.plan, m);
    if (c.loopback() || p.deps.families[c.family].kind != FlowKind::Field) continue;
    ++cross;
    CHECK(m.size() == 7);
    CHECK(m.elements.size() == 7);
    CHECK(c.capacity == 7);
  }
  // Four neighbour reads, four directed node pairs each with one neighbour
  // in that direction, two iterations.
  CHECK(cross == 4 * 2 * 2);

  // Node (1,0) gets front[7, 1..7] from (0,0) for iterations 1 and 2.
  const std::size_t fam = family_index(p.deps, "S2.2", "S1.1");
  std::set<Point> reps;
  for (const auto& m : p.plan.messages) {
    const Channel& c = channel_of(p.plan, m);
    if (c.family != fam || c.src != 0 || c.dst != 2) continue;
    reps.insert(m.representative);
    CHECK(m.hull.lo == Point{7, 1});
    CHECK(m.hull.hi == Point{7, 7});
  }
  CHECK(reps == std::set<Point>{{1, 0, 0}, {2, 0, 0}});
}

TEST_CASE("hull ranks are row-major offsets") {
  Message m;
  m.hull = Box{{7, 8}, {7, 14}};
  CHECK(m.rank(Point{7, 9}) == 1);
  CHECK(m.rank(Point{7, 14}) == 6);
  CHECK(kind_of([&] { m.rank(Point{8, 9}); }) == ErrorKind::OutOfHull);
  Message row;
  row.hull = Box{{256}, {383}};  // third block of 128
  CHECK(row.rank(Point{300}) == 44);
  CHECK(row.size() == 128);
  Message grid;
  grid.hull = Box{{0, 0, 0}, {1, 2, 3}};
  CHECK(grid.rank(Point{1, 2, 3}) == 23);
}

TEST_CASE("messages hold exactly the transferred elements") {
  const Pipeline p = gol_pipeline("2x2");
  std::map<std::tuple<std::size_t, Point, std::size_t, std::size_t>, std::set<Point>> by_chunk;
  for (const auto& t : p.transfers) by_chunk[{t.family, t.representative, t.src, t.dst}].insert(t.element);
  std::set<std::tuple<std::size_t, Point, std::size_t, std::size_t>> keys;
  for (const auto& m : p.plan.messages) {
    const Channel& c = channel_of(p.plan, m);
    const auto key = std::make_tuple(c.family, m.representative, c.src, c.dst);
    CHECK(keys.insert(key).second);
    CHECK(std::set<Point>(m.elements.begin(), m.elements.end()) == by_chunk.at(key));
    for (const Point& e : m.elements) CHECK(m.hull.contains(e));
    CHECK(m.size() <= c.capacity);
  }
  CHECK(keys.size() == by_chunk.size());
}

TEST_CASE("event lists respect the protocol") {
  const Pipeline p = gol_pipeline("2x2");
  const CommPlan& plan = p.plan;
  const Scop& s = p.deps.scop;
  for (std::size_t node = 0; node < plan.nodes.size(); ++node) {
    const auto& events = plan.nodes[node].events;
    // Per message on this node: [send_wait, send] and [recv_wait, recv].
    std::map<std::size_t, std::map<EventKind, Point>> at;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const Event& e = events[k];
      if (k) {
        const Event& prev = events[k - 1];
        const bool same_slot = prev.time == e.time && prev.kind == e.kind;
        CHECK((prev.time < e.time || (prev.time == e.time && prev.kind < e.kind) ||
               (same_slot && e.kind != EventKind::Compute)));
      }
      if (e.kind != EventKind::Compute) {
        CHECK(at[e.chunk].emplace(e.kind, e.time).second);
        CHECK(e.time.back() % 2 != 0);
      } else {
        CHECK(e.time.back() % 2 == 0);
      }
    }
    auto window = [&](std::size_t chunk, EventKind open, EventKind close, const Point& t) {
      const auto& w = at.at(chunk);
      return w.at(open) < t && t < w.at(close);
    };
    for (const Event& e : events) {
      if (e.kind != EventKind::Compute) continue;
      const Statement& st = s.statements[e.stmt];
      if (st.role == Statement::Role::Normal) {
        CHECK(e.moves.empty());
        std::size_t reads = 0;
        for (const auto& a : st.accesses) reads += a.kind == AccessKind::Read;
        // Field values only ever come from receive buffers.
        CHECK(e.reads.size() == reads);
        for (const auto& w : e.writes) CHECK(w.first == st.write_access());
        if (st.write_access()) CHECK_FALSE(e.writes.empty());
      }
      for (const auto& [acc, ref] : e.reads) {
        bool inside = false;
        for (const auto& [chunk, w] : at)
          if (plan.messages[chunk].channel == ref.channel && w.count(EventKind::RecvWait) &&
              window(chunk, EventKind::RecvWait, EventKind::Recv, e.time))
            inside = true;
        CHECK(inside);
      }
      for (const auto& [acc, ref] : e.writes) {
        bool inside = false;
        for (const auto& [chunk, w] : at)
          if (plan.messages[chunk].channel == ref.channel && w.count(EventKind::SendWait) &&
              window(chunk, EventKind::SendWait, EventKind::Send, e.time))
            inside = true;
        CHECK(inside);
      }
    }
    for (const auto& [chunk, w] : at) {
      if (w.count(EventKind::Send)) CHECK(w.at(EventKind::SendWait) < w.at(EventKind::Send));
      if (w.count(EventKind::Recv)) CHECK(w.at(EventKind::RecvWait) < w.at(EventKind::Recv));
    }
  }
  // Every message is sent once by its source and received once by its
  // destination.
  std::map<std::size_t, std::pair<int, int>> seen;
  for (std::size_t node = 0; node < plan.nodes.size(); ++node)
    for (const Event& e : plan.nodes[node].events) {
      const Channel& c = plan.channels[plan.messages.at(e.chunk).channel];
      if (e.kind == EventKind::Send) {
        CHECK(c.src == node);
        ++seen[e.chunk].first;
      } else if (e.kind == EventKind::Recv) {
        CHECK(c.dst == node);
        ++seen[e.chunk].second;
      }
    }
  CHECK(seen.size() == plan.messages.size());
  for (const auto& [chunk, n] : seen) CHECK(n == std::make_pair(1, 1));
}

TEST_CASE("channels sharing a slot never overlap") {
  const Pipeline p = gol_pipeline("2x2");
  const CommPlan& plan = p.plan;
  // Lifetime of a message: send_wait on the source to recv on the destination.
  std::map<std::size_t, std::pair<Point, Point>> life;
  for (const auto& np : plan.nodes)
    for (const Event& e : np.events) {
      if (e.kind == EventKind::SendWait) life[e.chunk].first = e.time;
      if (e.kind == EventKind::Recv) life[e.chunk].second = e.time;
    }
  std::map<std::size_t, std::vector<std::size_t>> per_channel;
  for (std::size_t m = 0; m < plan.messages.size(); ++m) per_channel[plan.messages[m].channel].push_back(m);
  for (const auto& [ch, ms] : per_channel)
    for (std::size_t a = 0; a < ms.size(); ++a)
      for (std::size_t b = a + 1; b < ms.size(); ++b) {
        const auto& x = life.at(ms[a]);
        const auto& y = life.at(ms[b]);
        CHECK((x.second < y.first || y.second < x.first));
      }
  std::set<std::int64_t> tags;
  for (const auto& c : plan.channels) CHECK(tags.insert(c.tag).second);
}

TEST_CASE("plan text round trip") {
  for (const char* grid : {"1x1", "2x2"}) {
    const Pipeline p = gol_pipeline(grid);
    const std::string text = plan_text(p.plan, p.deps.scop);
    const CommPlan back = parse_plan(text, p.deps.scop);
    CHECK(plan_text(back, p.deps.scop) == text);
    CHECK(back.channels.size() == p.plan.channels.size());
    for (std::size_t n = 0; n < back.nodes.size(); ++n) CHECK(back.nodes[n].events == p.plan.nodes[n].events);
  }
  const Scop s = isolate_accesses(parse_scop(kShiftChain));
  const Pipeline p = run_pipeline(s, Grid{s.grid});
  CHECK(plan_text(p.plan, p.deps.scop) == slurp(golden("shift_chain_plan.txt")));
  CHECK(kind_of([&] { parse_plan("plan grid=(2) arity=3\nbogus line\n", p.deps.scop); }) == ErrorKind::ParseError);
}

TEST_CASE("dilated times interleave communication") {
  const Scop s = gol16();
  const Statement& st = s.statement("S1.1");
  const Point t = dilated_time(st, Point{1, 2, 3});
  CHECK(t.size() == st.time(Point{1, 2, 3}).size());
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == 2 * st.time(Point{1, 2, 3})[k]);
}

TEST_CASE("coinciding compute events are rejected") {
  const Scop s = isolate_accesses(parse_scop(kStraightLine));
  Pipeline p = run_pipeline(s, Grid{s.grid});
  // Q.2 writes B[3] on node 1; move it onto P's node and time.
  DepGraph d = p.deps;
  Statement& q = d.scop.statements[d.scop.statement_index("Q.1")];
  q.schedule = parse_map("{ Q.1[] -> [0, 0] }");
  for (auto& ns : p.stmts.nodes[d.scop.statement_index("Q.1")]) ns = NodeSet{0};
  CHECK(kind_of([&] { emit_protocol(d, p.fields, p.stmts, build_transfers(d, p.fields, p.stmts, p.chunks)); }) ==
        ErrorKind::ScatterCollision);
}
