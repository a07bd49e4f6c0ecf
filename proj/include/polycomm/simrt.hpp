#pragma once

// Lockstep simulator of the node grid executing a CommPlan.

#include <string>
#include <vector>

#include "polycomm/commgen.hpp"

namespace polycomm {

enum class ChannelState { Ready, Filling, InFlight, Delivered, Draining };
const char* to_string(ChannelState s);

struct TraceEntry {
  std::size_t step = 0;
  std::size_t node = 0;
  EventKind kind = EventKind::Send;
  std::size_t chunk = 0;
  std::size_t channel = 0;
  std::uint64_t digest = 0;  // FNV-1a of the buffer contents

  bool operator==(const TraceEntry& o) const = default;
};

struct Trace {
  std::vector<TraceEntry> entries;
  std::string text(const Grid& grid) const;
  bool operator==(const Trace& o) const = default;
};

class Simulator {
 public:
  /// `scop` must contain the virtual statements the plan refers to. Each
  /// node's home storage is filled from `init`. Throws GeometryMismatch when
  /// the plan was built for another grid.
  Simulator(const Scop& scop, const CommPlan& plan, const Grid& grid, const FieldContents& init);

  /// Executes every node's events to completion.
  void run();
  /// Home storage gathered into one memory image.
  FieldContents contents() const;
  const Trace& trace() const { return trace_; }
  std::size_t steps() const { return step_; }

  /// Synchronous access to an element at its home node(s), from anywhere.
  Value value_load(std::string_view field, std::span<const std::int64_t> index) const;
  void value_store(std::string_view field, std::span<const std::int64_t> index, const Value& v);
  /// Rank of a home element in a node's local storage; NotLocal otherwise.
  std::int64_t local_rank(std::size_t node, std::string_view field, std::span<const std::int64_t> index) const;
  std::size_t local_count(std::size_t node, std::string_view field) const;

  ChannelState channel_state(std::size_t channel) const { return channels_.at(channel).state; }

 private:
  struct ChannelRt {
    ChannelState state = ChannelState::Ready;
    bool acquired = false;  // recv_wait done for the delivered message
    std::size_t chunk = 0;
    std::size_t since = 0;  // step of the last send or recv
    std::vector<Value> send, recv;
  };
  struct NodeRt {
    std::vector<std::vector<Point>> homes;     // per field, sorted
    std::vector<std::vector<Value>> storage;   // per field, by local rank
    ScalarEnv scalars;
    std::size_t cursor = 0;
  };

  std::size_t field_slot(std::string_view field) const;
  bool try_execute(std::size_t node, const Event& e);
  void compute(std::size_t node, const Event& e);
  void advance_channels();
  Value& home_value(std::size_t node, std::size_t field, std::span<const std::int64_t> index);
  void record(std::size_t node, const Event& e, const std::vector<Value>& buffer);

  const Scop& scop_;
  const CommPlan& plan_;
  FieldPlacement fp_;
  std::vector<NodeRt> nodes_;
  std::vector<ChannelRt> channels_;
  Trace trace_;
  std::size_t step_ = 0;
  bool finished_ = false;
};

/// Convenience: build, run and gather.
FieldContents simulate(const Scop& scop, const CommPlan& plan, const FieldContents& init, Trace* trace = nullptr);

}  // namespace polycomm
