#pragma once

// Data paths, small synthetic SCoPs and helpers shared by the unit tests.

#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "polycomm/error.hpp"
#include "polycomm/scop.hpp"

namespace fixtures {

inline std::string data(const std::string& name) { return std::string(POLYCOMM_DATA_DIR) + "/" + name; }
inline std::string golden(const std::string& name) { return std::string(POLYCOMM_GOLDEN_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline polycomm::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const polycomm::Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return polycomm::ErrorKind::ValidationError;
}

inline polycomm::Scop gol16(const polycomm::Constants& overrides = {}) {
  return polycomm::isolate_accesses(polycomm::load_scop(data("gol16.scop"), overrides));
}

// A[x] = A[x-1] + 1 for x = 1..N-1: every instance feeds the next one.
inline const char* kShiftChain = R"json({
  "constants": {"N": 8},
  "fields": [{"name": "A", "type": "int64", "extents": ["N"]}],
  "grid": [2],
  "scatter_arity": 2,
  "functions": [],
  "statements": [
    {"id": "S", "domain": "{ S[x] : 1 <= x < N }", "schedule": "{ S[x] -> [0, x] }",
     "accesses": [{"field": "A", "index": ["x - 1"], "kind": "read"},
                  {"field": "A", "index": ["x"], "kind": "write"}],
     "body": "(store @1 (+ @0 1))"}
  ]
})json";

// Two statements without a surrounding loop: P writes B[0], Q reads it.
inline const char* kStraightLine = R"json({
  "constants": {},
  "fields": [{"name": "B", "type": "int64", "extents": [4]}],
  "grid": [2],
  "scatter_arity": 1,
  "functions": [],
  "statements": [
    {"id": "P", "domain": "{ P[] }", "schedule": "{ P[] -> [0] }",
     "accesses": [{"field": "B", "index": ["0"], "kind": "write"}],
     "body": "(store @0 7)"},
    {"id": "Q", "domain": "{ Q[] }", "schedule": "{ Q[] -> [1] }",
     "accesses": [{"field": "B", "index": ["0"], "kind": "read"},
                  {"field": "B", "index": ["3"], "kind": "write"}],
     "body": "(store @1 (* @0 2))"}
  ]
})json";

// 1-D three-point smoothing, two sweeps, over an int64 field on a [4] grid.
inline const char* kJacobi1D = R"json({
  "constants": {"N": 16, "T": 2},
  "fields": [{"name": "u", "type": "int64", "extents": ["N"]},
             {"name": "v", "type": "int64", "extents": ["N"]}],
  "grid": [4],
  "scatter_arity": 3,
  "functions": [],
  "statements": [
    {"id": "A", "domain": "{ A[t,x] : 0 <= t < T and 1 <= x < N - 1 }", "schedule": "{ A[t,x] -> [t, 0, x] }",
     "accesses": [{"field": "u", "index": ["x - 1"], "kind": "read"},
                  {"field": "u", "index": ["x"], "kind": "read"},
                  {"field": "u", "index": ["x + 1"], "kind": "read"},
                  {"field": "v", "index": ["x"], "kind": "write"}],
     "body": "(store @3 (+ @0 (+ @1 @2)))"},
    {"id": "B", "domain": "{ B[t,x] : 0 <= t < T and 1 <= x < N - 1 }", "schedule": "{ B[t,x] -> [t, 1, x] }",
     "accesses": [{"field": "v", "index": ["x"], "kind": "read"},
                  {"field": "u", "index": ["x"], "kind": "write"}],
     "body": "(store @1 (- @0 (* 2 @0)))"}
  ]
})json";

}  // namespace fixtures
