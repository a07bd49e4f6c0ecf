#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "polycomm/rng.hpp"
#include "polycomm/simrt.hpp"

using namespace polycomm;
using namespace fixtures;

namespace {

struct Run {
  Scop source;
  Pipeline p;
};

Run prepare(const Scop& source, const Grid& grid) { return Run{source, run_pipeline(isolate_accesses(source), grid)}; }

Run gol(const std::string& grid, const Constants& overrides = {}) {
  return prepare(load_scop(data("gol16.scop"), overrides), parse_grid(grid));
}

void sort_events(NodeProgram& np) {
  std::stable_sort(np.events.begin(), np.events.end(),
                   [](const Event& a, const Event& b) { return std::tie(a.time, a.kind) < std::tie(b.time, b.kind); });
}

// First cross-node message of a field family.
std::size_t cross_message(const Pipeline& p) {
  for (std::size_t m = 0; m < p.plan.messages.size(); ++m) {
    const Channel& c = p.plan.channels[p.plan.messages[m].channel];
    if (!c.loopback() && p.deps.families[c.family].kind == FlowKind::Field) return m;
  }
  FAIL("no cross-node message");
  return 0;
}

Event& event_of(CommPlan& plan, std::size_t node, std::size_t chunk, EventKind kind) {
  for (auto& e : plan.nodes[node].events)
    if (e.kind == kind && e.chunk == chunk) return e;
  FAIL("no such event");
  return plan.nodes[node].events.front();
}

}  // namespace

TEST_CASE("simulation equals sequential execution on gol16") {
  for (const char* grid : {"1x1", "2x2", "4x4"}) {
    const Run r = gol(grid);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const FieldContents init = FieldContents::random(r.source, seed);
      CAPTURE(grid);
      CAPTURE(seed);
      const auto div = first_divergence(sequential_execute(r.source, init), simulate(r.p.deps.scop, r.p.plan, init));
      CHECK_MESSAGE(!div, (div ? div->describe() : ""));
    }
  }
}

TEST_CASE("simulation equals sequential execution on the synthetic SCoPs") {
  for (const char* text : {kShiftChain, kStraightLine, kJacobi1D}) {
    const Scop s = parse_scop(text);
    const Run r = prepare(s, Grid{s.grid});
    for (std::uint64_t seed : {7u, 8u}) {
      const FieldContents init = FieldContents::random(s, seed);
      CHECK_FALSE(first_divergence(sequential_execute(s, init), simulate(r.p.deps.scop, r.p.plan, init)));
    }
  }
  // The shift chain also works on a single node and a four-node line.
  const Scop s = parse_scop(kShiftChain);
  for (std::int64_t n : {1, 4}) {
    const Run r = prepare(s, Grid{{n}});
    const FieldContents init = FieldContents::random(s, 3);
    CHECK_FALSE(first_divergence(sequential_execute(s, init), simulate(r.p.deps.scop, r.p.plan, init)));
  }
}

TEST_CASE("runs are deterministic and leave every channel ready") {
  const Run r = gol("2x2");
  const FieldContents init = FieldContents::random(r.source, 11);
  Simulator a(r.p.deps.scop, r.p.plan, r.p.plan.grid, init);
  Simulator b(r.p.deps.scop, r.p.plan, r.p.plan.grid, init);
  a.run();
  b.run();
  CHECK(a.trace() == b.trace());
  CHECK(a.steps() == b.steps());
  CHECK(a.trace().text(r.p.plan.grid) == b.trace().text(r.p.plan.grid));
  for (std::size_t c = 0; c < r.p.plan.channels.size(); ++c) CHECK(a.channel_state(c) == ChannelState::Ready);
}

TEST_CASE("channels deliver in send order and sends precede receives") {
  const Run r = gol("4x4", {{"N", 32}});
  Trace trace;
  simulate(r.p.deps.scop, r.p.plan, FieldContents::random(r.source, 5), &trace);
  std::map<std::size_t, std::vector<std::size_t>> sent, received;
  std::map<std::size_t, std::size_t> send_step;
  for (const auto& e : trace.entries) {
    if (e.kind == EventKind::Send) {
      sent[e.channel].push_back(e.chunk);
      send_step[e.chunk] = e.step;
    }
    if (e.kind == EventKind::RecvWait) {
      received[e.channel].push_back(e.chunk);
      CHECK(send_step.count(e.chunk));
      CHECK(send_step[e.chunk] < e.step);
    }
  }
  CHECK(sent == received);
  CHECK(send_step.size() == r.p.plan.messages.size());
}

TEST_CASE("plan files drive the simulator") {
  const Run r = gol("2x2");
  const CommPlan parsed = parse_plan(plan_text(r.p.plan, r.p.deps.scop), r.p.deps.scop);
  const FieldContents init = FieldContents::random(r.source, 4);
  CHECK_FALSE(first_divergence(sequential_execute(r.source, init), simulate(r.p.deps.scop, parsed, init)));
}

TEST_CASE("a plan for another grid is rejected") {
  const Run r = gol("2x2");
  const FieldContents init = FieldContents::random(r.source, 1);
  CHECK(kind_of([&] { Simulator(r.p.deps.scop, r.p.plan, parse_grid("4x4"), init); }) == ErrorKind::GeometryMismatch);
}

TEST_CASE("waiting for a message that is sent later deadlocks") {
  Run r = gol("2x2");
  CommPlan plan = r.p.plan;
  const std::size_t m = cross_message(r.p);
  const Channel& c = plan.channels[plan.messages[m].channel];
  // Receiver waits at the moment the sender only starts filling the buffer.
  event_of(plan, c.dst, m, EventKind::RecvWait).time = event_of(plan, c.src, m, EventKind::SendWait).time;
  sort_events(plan.nodes[c.dst]);
  const FieldContents init = FieldContents::random(r.source, 1);
  CHECK(kind_of([&] { simulate(r.p.deps.scop, plan, init); }) == ErrorKind::DeadlockDetected);
}

TEST_CASE("a dropped send deadlocks, a dropped recv leaves a buffer busy") {
  const Run r = gol("2x2");
  const FieldContents init = FieldContents::random(r.source, 1);
  const std::size_t m = cross_message(r.p);
  const Channel& c = r.p.plan.channels[r.p.plan.messages[m].channel];
  auto without = [&](std::size_t node, EventKind kind) {
    CommPlan plan = r.p.plan;
    auto& ev = plan.nodes[node].events;
    ev.erase(std::find_if(ev.begin(), ev.end(), [&](const Event& e) { return e.kind == kind && e.chunk == m; }));
    return plan;
  };
  const CommPlan no_send = without(c.src, EventKind::Send);
  CHECK(kind_of([&] { simulate(r.p.deps.scop, no_send, init); }) == ErrorKind::DeadlockDetected);
  const CommPlan no_recv = without(c.dst, EventKind::Recv);
  const ErrorKind k = kind_of([&] { simulate(r.p.deps.scop, no_recv, init); });
  CHECK((k == ErrorKind::DeadlockDetected || k == ErrorKind::BufferStateViolation));
  const CommPlan no_wait = without(c.dst, EventKind::RecvWait);
  CHECK(kind_of([&] { simulate(r.p.deps.scop, no_wait, init); }) == ErrorKind::BufferStateViolation);
}

TEST_CASE("home storage access") {
  const Run r = gol("2x2");
  const FieldContents init = FieldContents::random(r.source, 21);
  FieldContents mirror = init;
  Simulator sim(r.p.deps.scop, r.p.plan, r.p.plan.grid, init);
  CHECK(sim.local_count(0, "front") == 64);
  CHECK(sim.local_rank(0, "front", Point{3, 5}) == 29);
  CHECK(sim.local_rank(3, "back", Point{15, 15}) == 63);
  CHECK(kind_of([&] { sim.local_rank(0, "front", Point{8, 0}); }) == ErrorKind::NotLocal);
  CHECK(kind_of([&] { sim.value_load("front", Point{16, 0}); }) == ErrorKind::IndexOutOfBounds);

  SplitMix64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const Point idx{rng.uniform(0, 15), rng.uniform(0, 15)};
    const char* field = rng.uniform(0, 1) ? "front" : "back";
    if (rng.uniform(0, 1)) {
      const Value v = rng.uniform(0, 1) == 1;
      sim.value_store(field, idx, v);
      mirror.field(field).at(idx) = v;
    }
    CHECK(sim.value_load(field, idx) == mirror.field(field).at(idx));
  }
  CHECK_FALSE(first_divergence(mirror, sim.contents()));
  sim.run();
  CHECK_FALSE(first_divergence(sequential_execute(r.source, mirror), sim.contents()));
}
