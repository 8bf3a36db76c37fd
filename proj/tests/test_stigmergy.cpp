#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "smadrl/errors.hpp"
#include "smadrl/stigmergy.hpp"

using namespace smadrl;

namespace {

const GridLayout& strip() {
  static const GridLayout g = GridLayout::from_ascii(
      "HH....\n"
      "HHTTTS\n"
      "HH....\n");
  return g;
}

}  // namespace

TEST_CASE("deposit applies the max rule and records metadata") {
  PheromoneMap map(strip(), {});
  const Cell c{3, 1};
  map.deposit(c, {true, 3, 2}, 7);
  CHECK(map.at(c).intensity == 1.0);
  CHECK(map.at(c).last_laden == 1);
  CHECK(map.at(c).last_action == 3);
  CHECK(map.at(c).last_visit_step == 7);

  // Decay to 0.9 unoccupied, deposit restores rho0.
  map.decay_all({});
  CHECK(map.at(c).intensity == doctest::Approx(0.9));
  map.deposit(c, {false, 1, 0}, 8);
  CHECK(map.at(c).intensity == 1.0);
  CHECK(map.at(c).last_laden == 0);
}

TEST_CASE("deposit leaves an intensity above rho0 untouched") {
  // rho0 below the occupied fixed point beta/alpha = 0.5.
  PheromoneMap map(strip(), {0.2, 0.1, 0.05});
  const Cell c{2, 1};
  const Cell occ[] = {c};
  double oracle = 0.0;
  for (int t = 0; t < 400; ++t) {
    map.deposit(c, {}, t);
    map.decay_all(occ);
    oracle = std::max(oracle, 0.2);
    oracle = 0.9 * oracle + 0.05;
  }
  CHECK(map.at(c).intensity == doctest::Approx(0.5).epsilon(1e-12));
  const double before = map.at(c).intensity;
  map.deposit(c, {}, 400);
  CHECK(map.at(c).intensity == before);
  CHECK(before == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("decay examples") {
  PheromoneMap map(strip(), {});
  const Cell c{0, 0};
  map.deposit(c, {}, 0);
  map.decay_all({});
  CHECK(map.at(c).intensity == doctest::Approx(0.9).epsilon(1e-15));

  // Fixed point of the occupied recurrence.
  PheromoneMap fixed(strip(), {});
  const Cell d{4, 1};
  const Cell occ[] = {d};
  for (int t = 0; t < 300; ++t) fixed.decay_all(occ);
  CHECK(std::abs(fixed.at(d).intensity - 0.5) < 1e-12);
  fixed.decay_all(occ);
  CHECK(std::abs(fixed.at(d).intensity - 0.5) < 1e-12);
}

TEST_CASE("field of view reads") {
  PheromoneMap map(strip(), {1.0, 0.1, 0.0});
  SUBCASE("radius 1 has eight triples") {
    CHECK(map.read_fov({3, 1}, 1).size() == 8);
    CHECK(map.read_fov({3, 1}, 2).size() == 24);
  }
  SUBCASE("corner neighbours outside the map are zero") {
    for (Cell c : strip().home_cells()) map.deposit(c, {true, 4, 0}, 0);
    const auto fov = map.read_fov({0, 0}, 1);
    // Row-major without the centre: indices 0,1,2 (row above), 3 (west), 5 (south-west).
    for (int k : {0, 1, 2, 3, 5}) {
      CHECK(fov[k].intensity == 0.0f);
      CHECK(fov[k].laden == 0.0f);
      CHECK(fov[k].action == 0.0f);
    }
    CHECK(fov[4].intensity == 1.0f);  // east neighbour (1,0)
    CHECK(fov[4].action == 1.0f);
  }
  SUBCASE("neighbour visited three steps ago by a laden agent") {
    map.deposit({4, 1}, {true, 2, 3}, 0);
    for (int t = 0; t < 3; ++t) map.decay_all({});
    const auto fov = map.read_fov({3, 1}, 1);
    const double expect = std::pow(0.9, 3);  // beta = 0: normalised by rho0
    CHECK(fov[4].intensity == doctest::Approx(expect).epsilon(1e-6));
    CHECK(fov[4].laden == 1.0f);
    CHECK(fov[4].action == 0.5f);
  }
}

TEST_CASE("wall cells never hold pheromone") {
  PheromoneMap map(GridLayout::chambers({}), {});
  CHECK_THROWS_AS(map.deposit({6, 0}, {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(map.deposit({-1, 0}, {}, 0), std::invalid_argument);
}

TEST_CASE("tunnel density") {
  const auto g = GridLayout::chambers({});
  std::vector<Cell> none{{0, 0}, {1, 1}};
  CHECK(tunnel_density(g, none) == 0.0);
  std::vector<Cell> two{{6, 2}, {9, 2}, {0, 0}};
  CHECK(tunnel_density(g, two) == 0.25);
  std::vector<Cell> full;
  for (Cell c : g.tunnel_cells()) full.push_back(c);
  CHECK(tunnel_density(g, full) == 1.0);
}

TEST_CASE("parameter validation and csv dump") {
  CHECK_THROWS_AS(PheromoneParams({1.0, 0.0, 0.05}).validate(), ConfigError);
  CHECK_THROWS_AS(PheromoneParams({1.0, 1.0, 0.05}).validate(), ConfigError);
  CHECK_THROWS_AS(PheromoneParams({1.0, 0.1, -0.1}).validate(), ConfigError);
  CHECK(PheromoneParams{}.normalizer() == doctest::Approx(0.5));

  PheromoneMap map(strip(), {});
  map.deposit({2, 1}, {true, 3, 0}, 4);
  std::ostringstream out;
  map.write_csv(out, 1, 4, true);
  const std::string s = out.str();
  CHECK(s.rfind("episode,step,x,y,rho,last_laden,last_action,last_visit_step\n", 0) == 0);
  CHECK(s.find("1,4,2,1,1,1,3,4\n") != std::string::npos);
}
