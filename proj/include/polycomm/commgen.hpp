#pragma once

// Communication generation: unique-producer transfers, chunk messages,
// buffer layouts, channels and the per-node event lists of a plan.

#include <string>
#include <vector>

#include "polycomm/chunking.hpp"
#include "polycomm/placement.hpp"

namespace polycomm {

/// One value moving from a producer execution to a consumer execution.
struct Transfer {
  std::size_t family = 0;
  Point representative;  // chunk label, phi of the collapsed side
  Point producer, consumer;
  std::size_t src = 0, dst = 0;  // node ids
  Point element;

  bool operator==(const Transfer& o) const = default;
  auto operator<=>(const Transfer& o) const = default;
};

/// Transfers', sorted: per consumer execution and element, the producer
/// execution on the consumer's node if there is one, else the producer's
/// lexmin node. Prologue sources and epilogue destinations are the element's
/// homes.
std::vector<Transfer> build_transfers(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp,
                                      const std::vector<ChunkingFn>& chunks);

enum class EventKind { Send, Recv, SendWait, RecvWait, Compute };
const char* to_string(EventKind k);
EventKind parse_event_kind(std::string_view text);

struct Channel {
  std::size_t family = 0;
  std::size_t slot = 0;  // buffers of one (family, src, dst) whose lifetimes overlap
  std::size_t src = 0, dst = 0;
  std::int64_t tag = 0;
  std::int64_t capacity = 0;
  ElemType type = ElemType::Bool;

  bool loopback() const { return src == dst; }
};

/// One chunk of one family between one (src, dst) pair: a single message.
struct Message {
  std::size_t channel = 0;
  Point representative;
  Box hull;
  std::vector<Point> elements;  // sorted

  std::int64_t size() const { return hull.volume(); }
  /// Row-major rank inside the hull; OutOfHull outside it.
  std::int64_t rank(std::span<const std::int64_t> element) const;
};

struct BufferRef {
  std::size_t channel = 0;
  std::int64_t rank = 0;
  auto operator<=>(const BufferRef& o) const = default;
};

/// Prologue: home storage -> send buffer. Epilogue: recv buffer -> home.
struct ElementMove {
  std::string field;
  Point element;
  BufferRef buffer;
  bool operator==(const ElementMove& o) const = default;
};

struct Event {
  Point time;  // on the dilated scatter; odd last coordinate for comm events
  EventKind kind = EventKind::Compute;
  std::size_t chunk = 0;  // message id, comm events
  std::size_t stmt = 0;   // compute events
  Point instance;
  std::vector<std::pair<std::size_t, BufferRef>> reads;   // access -> recv buffer
  std::vector<std::pair<std::size_t, BufferRef>> writes;  // access -> send buffer
  std::vector<ElementMove> moves;

  bool operator==(const Event& o) const = default;
};

struct NodeProgram {
  Point node;
  std::vector<Event> events;  // sorted by (time, kind)
};

struct CommPlan {
  Grid grid;
  std::size_t arity = 0;
  std::vector<Channel> channels;
  std::vector<Message> messages;
  std::vector<NodeProgram> nodes;
};

/// Whole pipeline from an isolated SCoP: flows, placements, chunking, plan.
struct Pipeline {
  DepGraph deps;
  FieldPlacement fields;
  StmtPlacement stmts;
  std::vector<ChunkingFn> chunks;
  std::vector<Transfer> transfers;
  CommPlan plan;
};
Pipeline run_pipeline(const Scop& isolated, const Grid& grid);

/// Scatter times are dilated by 2; send_wait/recv_wait sit one step before
/// the first producer/consumer, send/recv one step after the last.
CommPlan emit_protocol(const DepGraph& d, const FieldPlacement& fp, const StmtPlacement& sp,
                       const std::vector<Transfer>& transfers);

/// Dilated scatter time of an instance.
Point dilated_time(const Statement& st, std::span<const std::int64_t> instance);

std::string plan_text(const CommPlan& plan, const Scop& scop);
/// Inverse of plan_text; `scop` supplies the statement ids (with virtual
/// statements).
CommPlan parse_plan(std::string_view text, const Scop& scop);

}  // namespace polycomm
