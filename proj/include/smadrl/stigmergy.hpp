#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "smadrl/grid.hpp"

namespace smadrl {

// Digital pheromone dynamics: rho(t+1) = (1 - alpha) rho(t) + beta, with the
// beta term applied only while the cell is occupied.
struct PheromoneParams {
  double rho0 = 1.0;
  double alpha = 0.1;
  double beta = 0.05;

  void validate() const;
  // Scale used to normalise intensities in observations.
  double normalizer() const { return beta > 0.0 ? beta / alpha : rho0; }
};

struct PheromoneCell {
  double intensity = 0.0;
  std::uint8_t last_laden = 0;
  std::uint8_t last_action = 0;
  std::uint8_t last_mode = 0;
  std::int64_t last_visit_step = -1;  // -1: never visited
};

// What an agent leaves behind in the cell it occupies.
struct DepositInfo {
  bool laden = false;
  int action = 0;
  int mode = 0;
};

struct FovReading {
  float intensity = 0.0f;  // normalised
  float laden = 0.0f;
  float action = 0.0f;  // action index / 4
};

class PheromoneMap {
 public:
  PheromoneMap() = default;
  PheromoneMap(const GridLayout& layout, PheromoneParams params);

  void clear();

  // intensity <- max(intensity, rho0); metadata is last-writer-wins.
  void deposit(Cell cell, const DepositInfo& info, std::int64_t step);

  // One decay step over the whole map; call once per environment step,
  // after the deposits.
  void decay_all(std::span<const Cell> occupied);

  // Moore neighbourhood of the given radius in row-major order without the
  // centre; walls and out-of-bounds cells read as zeros.
  std::vector<FovReading> read_fov(Cell center, int radius) const;
  void read_fov_into(Cell center, int radius, std::span<float> out) const;

  const PheromoneCell& at(Cell c) const { return cells_[index(c)]; }
  const PheromoneParams& params() const { return params_; }
  int width() const { return width_; }
  int height() const { return height_; }

  // Rows of episode,step,x,y,rho,last_laden,last_action,last_visit_step for
  // every non-wall cell.
  void write_csv(std::ostream& out, int episode, std::int64_t step, bool header) const;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  int width_ = 0;
  int height_ = 0;
  PheromoneParams params_;
  std::vector<std::uint8_t> wall_;
  std::vector<std::uint8_t> occupied_scratch_;
  std::vector<PheromoneCell> cells_;
};

// Size of the Moore neighbourhood (without centre) for a radius.
constexpr int fov_cell_count(int radius) { return (2 * radius + 1) * (2 * radius + 1) - 1; }

// n / L, where n counts positions on tunnel cells.
double tunnel_density(const GridLayout& layout, std::span<const Cell> positions);

}  // namespace smadrl
