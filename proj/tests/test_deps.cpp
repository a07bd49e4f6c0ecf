#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "pipeline_oracle.hpp"
#include "polycomm/deps.hpp"

using namespace polycomm;
using namespace fixtures;
using oracle::analysed_edges;
using oracle::Edge;
using oracle::replay_edges;

namespace {

std::size_t count(const DepGraph& d, FlowKind k) { return d.of_kind(k).size(); }

const FlowFamily* find(const DepGraph& d, FlowKind k, const std::string& producer, const std::string& consumer) {
  for (const FlowFamily* f : d.of_kind(k))
    if (d.scop.statements[f->producer].id == producer && d.scop.statements[f->consumer].id == consumer) return f;
  return nullptr;
}

}  // namespace

TEST_CASE("gol16 flows match the golden dump") {
  const DepGraph d = compute_flow(gol16());
  CHECK(dump_deps(d) == slurp(golden("gol16_deps.txt")));
}

TEST_CASE("gol16 flows match a last-writer replay") {
  const Scop s = gol16();
  const DepGraph d = compute_flow(s);
  const std::set<Edge> want = replay_edges(s);
  const std::set<Edge> got = analysed_edges(d);
  CHECK(want.size() == got.size());
  CHECK(want == got);
}

TEST_CASE("family relations hold exactly their edges") {
  const DepGraph d = compute_flow(gol16({{"N", 8}, {"ITERS", 2}}));
  for (const auto& f : d.families) {
    std::vector<PointPair> pairs;
    for (const auto& e : f.edges)
      pairs.push_back(f.kind == FlowKind::Output ? PointPair{e.producer, e.consumer} : PointPair{e.consumer, e.producer});
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    CAPTURE(family_text(d, f));
    CHECK(f.relation.graph() == pairs);
  }
}

TEST_CASE("synthetic SCoPs match the replay") {
  for (const char* text : {kShiftChain, kStraightLine, kJacobi1D}) {
    const Scop s = isolate_accesses(parse_scop(text));
    CHECK(analysed_edges(compute_flow(s)) == replay_edges(s));
  }
}

TEST_CASE("gol16 family counts and the published families") {
  const DepGraph d = compute_flow(gol16());
  CHECK(count(d, FlowKind::Field) == 6);
  CHECK(count(d, FlowKind::Input) == 5);
  CHECK(count(d, FlowKind::Output) == 2);
  CHECK(count(d, FlowKind::Scalar) == 7);
  CHECK(d.dropped.size() == 2);

  for (auto [p, c] : std::vector<std::pair<const char*, const char*>>{
           {"S1.7", "S2.1"}, {"S2.2", "S1.1"}, {"S2.2", "S1.2"}, {"S2.2", "S1.3"}, {"S2.2", "S1.4"}})
    CHECK(find(d, FlowKind::Field, p, c));
  for (const char* c : {"S1.1", "S1.2", "S1.3", "S1.4", "S1.5"}) CHECK(find(d, FlowKind::Input, kPrologue, c));
  for (const char* p : {"S1.7", "S2.2"}) CHECK(find(d, FlowKind::Output, p, kEpilogue));
  for (auto [p, c] : std::vector<std::pair<const char*, const char*>>{
           {"S1.1", "S1.2"}, {"S1.2", "S1.3"}, {"S1.3", "S1.4"}, {"S1.4", "S1.6"}, {"S1.5", "S1.6"}, {"S2.1", "S2.2"}})
    CHECK(find(d, FlowKind::Scalar, p, c));

  // (S2.2,(i-1,x-1,y)) feeds (S1.1,(i,x,y)).
  const FlowFamily* f = find(d, FlowKind::Field, "S2.2", "S1.1");
  REQUIRE(f);
  CHECK(f->relation.image(Point{2, 5, 7}) == std::vector<Point>{{1, 4, 7}});
  CHECK(f->relation.image(Point{0, 5, 7}).empty());
  // Only the last iteration reaches the epilogue.
  const FlowFamily* out = find(d, FlowKind::Output, "S2.2", kEpilogue);
  REQUIRE(out);
  CHECK(out->relation.domain().count() == 14 * 14);
  CHECK(std::all_of(out->edges.begin(), out->edges.end(), [](const FlowEdge& e) { return e.producer[0] == 2; }));
}

TEST_CASE("virtual statements bracket the schedule") {
  const Scop s = add_virtual_statements(gol16());
  const Statement& pro = s.statement(kPrologue);
  const Statement& epi = s.statement(kEpilogue);
  CHECK(pro.role == Statement::Role::Prologue);
  CHECK(epi.role == Statement::Role::Epilogue);
  CHECK(pro.domain.count() == 1);
  CHECK(pro.time(Point{}) == Point{-1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(epi.time(Point{}) == Point{1, 0, 0, 0, 0, 0, 0, 0});
  for (const auto& st : s.statements) {
    if (st.role != Statement::Role::Normal) continue;
    for (const Point& p : st.domain.enumerate()) {
      CHECK(pro.time(Point{}) < st.time(p));
      CHECK(st.time(p) < epi.time(Point{}));
    }
  }
}

TEST_CASE("a scalar read with no earlier writer is uncovered") {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(data("gol16.scop")));
  // Move S1.2 ahead of S1.1 inside the cell; it then reads `neighbors` first
  // at the very first cell.
  j["statements"][1]["schedule"] = "{ S1.2[i,x,y] -> [0, i, 0, x, 0, y, 0] }";
  j["statements"][0]["schedule"] = "{ S1.1[i,x,y] -> [0, i, 0, x, 0, y, 1] }";
  const Scop s = isolate_accesses(parse_scop(j.dump()));
  CHECK(kind_of([&] { compute_flow(s); }) == ErrorKind::UncoveredRead);
}

TEST_CASE("empty SCoP has no flows") {
  const DepGraph d = compute_flow(isolate_accesses(load_scop(data("empty.scop"))));
  CHECK(d.families.empty());
  CHECK(dump_deps(d).empty());
  CHECK(d.dropped.size() == 1);
}

TEST_CASE("analysis rejects virtual statements in its input") {
  const Scop s = add_virtual_statements(gol16({{"N", 4}, {"ITERS", 1}}));
  CHECK(kind_of([&] { compute_flow(s); }) == ErrorKind::ValidationError);
}
