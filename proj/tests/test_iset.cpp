#include "doctest.h"
#include "iset_oracle.hpp"
#include "polycomm/error.hpp"

using namespace polycomm;

namespace {

std::vector<Point> pts(const IntSet& s) { return s.enumerate(); }

}  // namespace

TEST_CASE("intersect examples") {
  auto a = parse_set("{ [i] : 0 <= i < 4 }");
  auto b = parse_set("{ [i] : 2 <= i < 8 }");
  CHECK(pts(intersect(a, b)) == std::vector<Point>{{2}, {3}});
  CHECK(equal(intersect(a, a), a));
  CHECK(intersect(parse_set("{ [i] : 0 <= i < 2 }"), parse_set("{ [i] : 5 <= i < 6 }")).is_empty());
}

TEST_CASE("space mismatch is reported") {
  auto a = parse_set("{ A[i] : 0 <= i < 4 }");
  auto b = parse_set("{ B[i] : 0 <= i < 4 }");
  auto c = parse_set("{ A[i,j] : 0 <= i < 4 and 0 <= j < 1 }");
  CHECK_THROWS_AS(intersect(a, b), Error);
  try {
    unite(a, c);
    FAIL("expected SpaceMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SpaceMismatch);
  }
}

TEST_CASE("union, subtract, emptiness, enumeration order") {
  auto s = parse_set("{ [x,y] : 0 <= x < 2 and 0 <= y < 2 }");
  CHECK(pts(s) == std::vector<Point>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(subtract(s, s).is_empty());
  CHECK(parse_set("{ [i] : 0 <= i < 0 }").is_empty());
  CHECK(unite(s, s).count() == 4);
}

TEST_CASE("unbounded sets are rejected on construction") {
  try {
    parse_set("{ [i] : i >= 0 }");
    FAIL("expected UnboundedSet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnboundedSet);
  }
}

TEST_CASE("apply examples") {
  auto transpose = parse_map("{ [i,j] -> [j,i] }");
  CHECK(pts(apply(transpose, parse_set("{ [1,2] }"))) == std::vector<Point>{{2, 1}});
  auto s = parse_set("{ [x,y] : 0 <= x < 3 and x <= y < 5 }");
  CHECK(equal(apply(IntMap::identity(s), s), s));
  auto blocks = parse_map("{ [i] -> [floor(i/8)] }");
  CHECK(pts(apply(blocks, parse_set("{ [7]; [8] }"))) == std::vector<Point>{{0}, {1}});
}

TEST_CASE("lexmin, lexmax, lex_lt_prefix") {
  auto s = parse_set("{ [x,y] : 0 <= x < 3 and 0 <= y < 3 }");
  CHECK(s.lexmin() == Point{0, 0});
  CHECK(s.lexmax() == Point{2, 2});
  const Point a{0, 3, 9}, b{0, 4, 0};
  CHECK(lex_lt_prefix(a, b, 2));
  CHECK_FALSE(lex_lt_prefix(a, b, 1));
  CHECK_FALSE(lex_lt_prefix(b, a, 3));
  try {
    parse_set("{ [i] : false }").lexmin();
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySet);
  }
}

TEST_CASE("compose and inverse") {
  auto f = parse_map("{ [i] -> [i + 1, 2i] : 0 <= i < 5 }");
  auto g = parse_map("{ [a,b] -> [a + b] }");
  auto h = compose(g, f);
  CHECK(h.graph() == std::vector<PointPair>{{{0}, {1}}, {{1}, {4}}, {{2}, {7}}, {{3}, {10}}, {{4}, {13}}});
  auto inv = inverse(f);
  CHECK(inv.image(Point{3, 4}) == std::vector<Point>{{2}});
  CHECK(inv.image(Point{3, 5}).empty());
}

TEST_CASE("transitive closure examples") {
  auto r = parse_map("{ [0] -> [1]; [1] -> [2] }");
  auto tc = transitive_closure(r);
  CHECK(tc.graph() == std::vector<PointPair>{{{0}, {1}}, {{0}, {2}}, {{1}, {2}}});
  CHECK(transitive_closure(IntMap::empty(Space::anonymous(1), Space::anonymous(1))).is_empty());
  // chain of length 5: pairs i < j over 0..4
  auto chain = transitive_closure(parse_map("{ [i] -> [i + 1] : 0 <= i < 4 }"));
  CHECK(chain.graph().size() == 10);
  CHECK(equal(transitive_closure(chain), chain));
}

TEST_CASE("floor nesting and divisor checks") {
  CHECK_NOTHROW(parse_map("{ [i] -> [floor(floor(i/2)/2)] : 0 <= i < 9 }"));
  CHECK_THROWS_AS(parse_map("{ [i] -> [floor(floor(floor(i/2)/2)/2)] : 0 <= i < 9 }"), Error);
  CHECK_THROWS_AS(parse_map("{ [i] -> [floor(i/0)] : 0 <= i < 9 }"), Error);
  auto nested = parse_map("{ [i] -> [floor(floor(i/2)/2)] : 0 <= i < 9 }");
  CHECK(nested.image(Point{7}) == std::vector<Point>{{1}});
  CHECK(nested.image(Point{8}) == std::vector<Point>{{2}});
}

TEST_CASE("printer and parser round trip") {
  for (const char* text : {"{ S[i,j] : 0 <= i <= 3 and 0 <= j <= i }", "{ [i] : false }",
                           "{ P[] }", "{ [x,y] : (0 <= x <= 1 and y = 0) or (x = 5 and 2 <= y <= 3) }"}) {
    auto s = parse_set(text);
    CHECK(equal(parse_set(to_string(s)), s));
  }
  auto m = parse_map("{ S1.1[i,x,y] -> S2.2[i - 1, x - 1, y] : 1 <= i < 3 and 1 <= x < 15 and 1 <= y < 15 }");
  CHECK(to_string(m) == "{ S1.1[i,x,y] -> S2.2[i - 1, x - 1, y] : 1 <= i <= 2 and 1 <= x <= 14 and 1 <= y <= 14 }");
  CHECK(equal(parse_map(to_string(m)), m));
  CHECK(to_string(parse_map("{ [w,h] -> [floor(w/8), floor(h/8)] }")) == "{ [w,h] -> [floor(w/8), floor(h/8)] }");
}

TEST_CASE("named constants substitute at parse time") {
  Constants c{{"N", 16}};
  auto s = parse_set("{ [x] : 1 <= x < N - 1 }", c);
  CHECK(s.count() == 14);
  CHECK_THROWS_AS(parse_set("{ [x] : 1 <= x < M }", c), Error);
}

TEST_CASE("coalescing keeps the point set exact") {
  auto tri = parse_set("{ [x,y] : 0 <= x < 6 and 0 <= y <= x }");
  auto back = IntSet::from_points(tri.space(), tri.enumerate());
  CHECK(equal(back, tri));
  CHECK(back.pieces().size() == 1);
  auto holes = parse_set("{ [x,y] : 0 <= x < 4 and 0 <= y < 4 and (x = 1 or y = 2) }");
  CHECK(equal(IntSet::from_points(holes.space(), holes.enumerate()), holes));
  auto fitted = IntMap::from_pairs(Space::anonymous(1), Space::anonymous(1),
                                   {{{0}, {0}}, {{1}, {0}}, {{2}, {1}}, {{3}, {1}}, {{4}, {2}}});
  CHECK(fitted.graph().size() == 5);
}

TEST_CASE("random algebra matches the enumeration oracle") {
  for (std::uint64_t seed = 5000; seed < 5300; ++seed) {
    auto failure = oracle::run_case(seed);
    INFO(failure.value_or(""));
    CHECK_FALSE(failure.has_value());
  }
}
