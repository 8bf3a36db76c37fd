#include "smadrl/stigmergy.hpp"

#include <algorithm>
#include <ostream>

#include "smadrl/errors.hpp"
#include "smadrl/format.hpp"

namespace smadrl {

void PheromoneParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("pheromone: alpha must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("pheromone: beta must be non-negative");
  if (!(rho0 > 0.0)) throw ConfigError("pheromone: rho0 must be positive");
}

PheromoneMap::PheromoneMap(const GridLayout& layout, PheromoneParams params)
    : width_(layout.width()),
      height_(layout.height()),
      params_(params),
      wall_(layout.cell_count()),
      occupied_scratch_(layout.cell_count()),
      cells_(layout.cell_count()) {
  params_.validate();
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    wall_[i] = layout.walkable(layout.cell_at(i)) ? 0 : 1;
  }
}

void PheromoneMap::clear() { std::fill(cells_.begin(), cells_.end(), PheromoneCell{}); }

void PheromoneMap::deposit(Cell cell, const DepositInfo& info, std::int64_t step) {
  if (cell.x < 0 || cell.y < 0 || cell.x >= width_ || cell.y >= height_ || wall_[index(cell)]) {
    throw std::invalid_argument("pheromone deposit on a wall or outside the map");
  }
  PheromoneCell& c = cells_[index(cell)];
  c.intensity = std::max(c.intensity, params_.rho0);
  c.last_laden = info.laden ? 1 : 0;
  c.last_action = static_cast<std::uint8_t>(info.action);
  c.last_mode = static_cast<std::uint8_t>(info.mode);
  c.last_visit_step = step;
}

void PheromoneMap::decay_all(std::span<const Cell> occupied) {
  for (Cell c : occupied) occupied_scratch_[index(c)] = 1;
  const double keep = 1.0 - params_.alpha;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (wall_[i]) continue;
    double& rho = cells_[i].intensity;
    rho = keep * rho + (occupied_scratch_[i] ? params_.beta : 0.0);
  }
  for (Cell c : occupied) occupied_scratch_[index(c)] = 0;
}

void PheromoneMap::read_fov_into(Cell center, int radius, std::span<float> out) const {
  const double scale = 1.0 / params_.normalizer();
  std::size_t k = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const Cell c{center.x + dx, center.y + dy};
      float rho = 0.0f, laden = 0.0f, action = 0.0f;
      if (c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_ && !wall_[index(c)]) {
        const PheromoneCell& p = cells_[index(c)];
        rho = static_cast<float>(p.intensity * scale);
        laden = static_cast<float>(p.last_laden);
        action = static_cast<float>(p.last_action) / 4.0f;
      }
      out[k++] = rho;
      out[k++] = laden;
      out[k++] = action;
    }
  }
}

std::vector<FovReading> PheromoneMap::read_fov(Cell center, int radius) const {
  const int n = fov_cell_count(radius);
  std::vector<float> flat(static_cast<std::size_t>(3 * n));
  read_fov_into(center, radius, flat);
  std::vector<FovReading> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
  return out;
}

void PheromoneMap::write_csv(std::ostream& out, int episode, std::int64_t step, bool header) const {
  if (header) out << "episode,step,x,y,rho,last_laden,last_action,last_visit_step\n";
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = index({x, y});
      if (wall_[i]) continue;
      const PheromoneCell& c = cells_[i];
      out << episode << ',' << step << ',' << x << ',' << y << ',' << format_double(c.intensity) << ',' << int(c.last_laden) << ','
          << int(c.last_action) << ',' << c.last_visit_step << '\n';
    }
  }
}

double tunnel_density(const GridLayout& layout, std::span<const Cell> positions) {
  const int length = layout.tunnel_length();
  if (length < 1) throw std::invalid_argument("tunnel density: layout has no tunnel");
  int n = 0;
  for (Cell p : positions) {
    if (layout.is_tunnel(p)) ++n;
  }
  return static_cast<double>(n) / length;
}

}  // namespace smadrl
