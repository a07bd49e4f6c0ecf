#pragma once

// Direct flow dependences (last writer of every read), split into field and
// scalar flows, with virtual prologue / epilogue statements.

#include <string>
#include <vector>

#include "polycomm/iset.hpp"
#include "polycomm/scop.hpp"

namespace polycomm {

inline constexpr const char* kPrologue = "Prologue";
inline constexpr const char* kEpilogue = "Epilogue";

/// Appends Prologue (leading scatter dim one below the earliest instance) and
/// Epilogue (one above the latest), both with the singleton domain { [] }.
Scop add_virtual_statements(const Scop& s);

enum class FlowKind {
  Field,   // statement -> statement through a field element
  Input,   // prologue -> statement
  Output,  // statement -> epilogue
  Scalar,  // statement -> statement through a node-local scalar
  Passthrough,  // prologue -> epilogue, computed then dropped
};

const char* to_string(FlowKind k);

struct FlowEdge {
  Point producer, consumer;
  Point element;  // field index; empty for scalar flows
};

/// All edges between one producer and one consumer statement carrying one
/// field access (or one scalar).
struct FlowFamily {
  FlowKind kind = FlowKind::Field;
  std::size_t producer = 0, consumer = 0;  // statement indices
  std::string carrier;                     // field or scalar name
  std::size_t access = 0;                  // consumer read access (Field/Input)
  std::vector<FlowEdge> edges;             // sorted by (consumer, producer)
  /// Consumer -> producer for every kind except Output, which is keyed by
  /// the producer.
  IntMap relation;
};

struct DepGraph {
  Scop scop;  // includes the virtual statements
  std::size_t prologue = 0, epilogue = 0;
  std::vector<FlowFamily> families;  // dropped prologue->epilogue flows excluded
  std::vector<FlowFamily> dropped;

  std::vector<const FlowFamily*> of_kind(FlowKind k) const;
};

/// Exact last-writer analysis. `s` must not already contain virtual
/// statements; they are added here.
DepGraph compute_flow(const Scop& s);

/// One line per family: `<kind> <carrier> { P[..] -> C[..] : ... }`.
std::string dump_deps(const DepGraph& g);
std::string family_text(const DepGraph& g, const FlowFamily& f);

}  // namespace polycomm
