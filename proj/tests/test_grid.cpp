#include <doctest.h>

#include <climits>
#include <deque>
#include <map>
#include <set>

#include "smadrl/errors.hpp"
#include "smadrl/grid.hpp"

using namespace smadrl;

namespace {

// Exhaustive shortest path by depth-first enumeration of simple paths. Only
// usable on tiny maps, which is the point: it shares nothing with BFS.
void enumerate(const GridLayout& g, Cell at, Cell goal, std::set<Cell>& seen, int len, int& best) {
  if (len >= best) return;
  if (at == goal) {
    best = len;
    return;
  }
  const Cell next[] = {{at.x + 1, at.y}, {at.x - 1, at.y}, {at.x, at.y + 1}, {at.x, at.y - 1}};
  for (Cell c : next) {
    if (!g.walkable(c) || seen.count(c)) continue;
    seen.insert(c);
    enumerate(g, c, goal, seen, len + 1, best);
    seen.erase(c);
  }
}

int brute_distance(const GridLayout& g, Cell from, Cell goal) {
  std::set<Cell> seen{from};
  int best = INT_MAX;
  enumerate(g, from, goal, seen, 0, best);
  return best;
}

}  // namespace

TEST_CASE("default chambers geometry") {
  const auto g = GridLayout::chambers({});
  CHECK(g.width() == 20);
  CHECK(g.height() == 5);
  CHECK(g.tunnel_length() == 8);
  CHECK(g.home_cells().size() == 30);
  CHECK(g.source_cells().size() == 5);
  for (Cell c : g.source_cells()) CHECK(c.x == 19);
  for (Cell c : g.tunnel_cells()) CHECK(c.y == 2);
  // Nearest home cell to the tunnel mouth comes first.
  CHECK(g.home_cells().front() == Cell{5, 2});
  CHECK_NOTHROW(validate_layout(g));
}

TEST_CASE("ascii round trip") {
  const char* art =
      "HH#..S\n"
      "HHTT.S\n"
      "HH#..S\n";
  const auto g = GridLayout::from_ascii(art);
  CHECK(g.to_ascii() == art);
  CHECK(g.tunnel_length() == 2);
  CHECK(g.is_source({5, 0}));
  CHECK_FALSE(g.walkable({2, 0}));
  CHECK_FALSE(g.walkable({-1, 0}));
}

TEST_CASE("distance field basics") {
  const auto g = GridLayout::from_ascii("H#####\nHTTTTS\nH#####\n");
  const Cell goal{5, 1};
  const DistanceField d(g, std::span<const Cell>(&goal, 1));
  CHECK(d.at(goal) == 0);
  for (int x = 1; x <= 5; ++x) CHECK(d.at({x, 1}) == 5 - x);
  CHECK(d.at({1, 0}) == kUnreachable);
  CHECK(d.max_finite() == 6);
}

TEST_CASE("distance follows the path around a wall, checked by enumeration") {
  const auto g = GridLayout::from_ascii(
      "H.....\n"
      "H.###.\n"
      "HT#S..\n"
      "H.#...\n");
  const Cell goal{3, 2};
  const DistanceField d(g, std::span<const Cell>(&goal, 1));
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      if (!g.walkable({x, y})) continue;
      CHECK_MESSAGE(d.at({x, y}) == brute_distance(g, {x, y}, goal), "cell " << x << "," << y);
    }
  }
  // Straight-line distance from (1,2) would be 2; the path is much longer.
  CHECK(d.at({1, 2}) > 2);
}

TEST_CASE("layout validation rejects broken arenas") {
  SUBCASE("no source") {
    CHECK_THROWS_AS(validate_layout(GridLayout::from_ascii("HTT.\n")), ConfigError);
  }
  SUBCASE("disconnected") {
    CHECK_THROWS_AS(validate_layout(GridLayout::from_ascii("HTS#.\n")), ConfigError);
  }
  SUBCASE("bypass around the tunnel") {
    CHECK_THROWS_AS(validate_layout(GridLayout::from_ascii("H..S\nHTTS\n")), ConfigError);
  }
  SUBCASE("wide tunnel") {
    CHECK_THROWS_AS(validate_layout(GridLayout::from_ascii("HTTS\nHTTS\n")), ConfigError);
  }
  SUBCASE("bad glyph") { CHECK_THROWS(GridLayout::from_ascii("HxTS\n")); }
  SUBCASE("zero tunnel") { CHECK_THROWS_AS(GridLayout::chambers({4, 3, 4, 3, 0}), ConfigError); }
}

TEST_CASE("distance field errors") {
  const auto g = GridLayout::from_ascii("HTS\n");
  CHECK_THROWS_AS(DistanceField(g, {}), ConfigError);
  const Cell wall{5, 5};
  CHECK_THROWS_AS(DistanceField(g, std::span<const Cell>(&wall, 1)), ConfigError);
}
