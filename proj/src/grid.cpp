#include "smadrl/grid.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <sstream>

#include "smadrl/errors.hpp"

namespace smadrl {

namespace {

constexpr std::array<Cell, 4> kSteps{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

std::vector<int> bfs(const GridLayout& layout, std::span<const Cell> goals) {
  std::vector<int> dist(layout.cell_count(), kUnreachable);
  std::deque<Cell> frontier;
  for (Cell g : goals) {
    if (!layout.walkable(g)) continue;
    if (dist[layout.index(g)] != 0) {
      dist[layout.index(g)] = 0;
      frontier.push_back(g);
    }
  }
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    const int d = dist[layout.index(c)];
    for (Cell s : kSteps) {
      const Cell n{c.x + s.x, c.y + s.y};
      if (!layout.walkable(n)) continue;
      int& dn = dist[layout.index(n)];
      if (dn == kUnreachable) {
        dn = d + 1;
        frontier.push_back(n);
      }
    }
  }
  return dist;
}

}  // namespace

GridLayout::GridLayout(int width, int height, std::vector<CellKind> kinds)
    : width_(width), height_(height), kinds_(std::move(kinds)) {
  if (width <= 0 || height <= 0 || kinds_.size() != static_cast<std::size_t>(width) * height) {
    throw ConfigError("grid layout: dimensions do not match cell count");
  }
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    const Cell c = cell_at(i);
    switch (kinds_[i]) {
      case CellKind::Home: home_.push_back(c); break;
      case CellKind::Source: source_.push_back(c); break;
      case CellKind::Tunnel: tunnel_.push_back(c); break;
      default: break;
    }
  }
  if (!tunnel_.empty()) {
    const auto d = bfs(*this, tunnel_);
    std::stable_sort(home_.begin(), home_.end(), [&](Cell a, Cell b) {
      return d[index(a)] < d[index(b)];
    });
  }
}

GridLayout GridLayout::from_ascii(std::string_view art) {
  std::vector<std::string> rows;
  std::string current;
  for (char ch : art) {
    if (ch == '\n') {
      if (!current.empty()) rows.push_back(current);
      current.clear();
    } else if (ch != ' ' && ch != '\r' && ch != '\t') {
      current.push_back(ch);
    }
  }
  if (!current.empty()) rows.push_back(current);
  if (rows.empty()) throw ConfigError("grid layout: empty map");

  const int width = static_cast<int>(rows.front().size());
  std::vector<CellKind> kinds;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != width) throw ConfigError("grid layout: ragged rows");
    for (char ch : row) {
      switch (ch) {
        case '#': kinds.push_back(CellKind::Wall); break;
        case '.': kinds.push_back(CellKind::Floor); break;
        case 'H': kinds.push_back(CellKind::Home); break;
        case 'S': kinds.push_back(CellKind::Source); break;
        case 'T': kinds.push_back(CellKind::Tunnel); break;
        default: throw ConfigError(std::string("grid layout: unknown cell character '") + ch + "'");
      }
    }
  }
  return GridLayout(width, static_cast<int>(rows.size()), std::move(kinds));
}

GridLayout GridLayout::chambers(const ChamberSpec& spec) {
  if (spec.home_width < 1 || spec.home_height < 1 || spec.source_width < 1 ||
      spec.source_height < 1 || spec.tunnel_length < 1) {
    throw ConfigError("arena: chamber sizes and tunnel length must be positive");
  }
  const int width = spec.home_width + spec.tunnel_length + spec.source_width;
  const int height = std::max(spec.home_height, spec.source_height);
  const int mid = height / 2;
  std::vector<CellKind> kinds(static_cast<std::size_t>(width) * height, CellKind::Wall);
  auto set = [&](int x, int y, CellKind k) { kinds[static_cast<std::size_t>(y) * width + x] = k; };

  const int home_top = (height - spec.home_height) / 2;
  for (int y = home_top; y < home_top + spec.home_height; ++y) {
    for (int x = 0; x < spec.home_width; ++x) set(x, y, CellKind::Home);
  }
  for (int x = spec.home_width; x < spec.home_width + spec.tunnel_length; ++x) {
    set(x, mid, CellKind::Tunnel);
  }
  const int source_left = spec.home_width + spec.tunnel_length;
  const int source_top = (height - spec.source_height) / 2;
  for (int y = source_top; y < source_top + spec.source_height; ++y) {
    for (int x = source_left; x < width; ++x) {
      set(x, y, x == width - 1 ? CellKind::Source : CellKind::Floor);
    }
  }
  return GridLayout(width, height, std::move(kinds));
}

std::string GridLayout::to_ascii() const {
  std::ostringstream out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      constexpr char glyph[] = {'#', '.', 'H', 'S', 'T'};
      out << glyph[static_cast<int>(kind({x, y}))];
    }
    out << '\n';
  }
  return out.str();
}

void validate_layout(const GridLayout& layout) {
  if (layout.home_cells().empty()) throw ConfigError("grid layout: no home cells");
  if (layout.source_cells().empty()) throw ConfigError("grid layout: no source cells");
  if (layout.tunnel_cells().empty()) throw ConfigError("grid layout: no tunnel cells");

  // Walkable region must be a single component.
  std::vector<Cell> start{layout.home_cells().front()};
  const auto dist = bfs(layout, start);
  for (std::size_t i = 0; i < layout.cell_count(); ++i) {
    if (layout.walkable(layout.cell_at(i)) && dist[i] == kUnreachable) {
      throw ConfigError("grid layout: disconnected arena");
    }
  }

  // Tunnel: a simple path, so every tunnel cell has at most two tunnel
  // neighbours, exactly two cells (the mouths) have one (unless L = 1), and
  // every cell beside the corridor is a wall.
  const auto& tunnel = layout.tunnel_cells();
  const auto tdist = bfs(layout, std::span<const Cell>(tunnel.data(), 1));
  int ends = 0;
  for (Cell c : tunnel) {
    int tunnel_neighbours = 0;
    for (Cell s : kSteps) {
      if (layout.is_tunnel({c.x + s.x, c.y + s.y})) ++tunnel_neighbours;
    }
    if (tunnel_neighbours > 2) throw ConfigError("grid layout: tunnel is wider than one cell");
    if (tunnel_neighbours <= 1) ++ends;
  }
  if (tunnel.size() > 1 && ends != 2) throw ConfigError("grid layout: tunnel is not a single corridor");
  for (Cell c : tunnel) {
    if (tdist[layout.index(c)] == kUnreachable) throw ConfigError("grid layout: tunnel is split");
  }
  // The corridor must be the only passage between home and source.
  std::vector<CellKind> blocked;
  blocked.reserve(layout.cell_count());
  for (std::size_t i = 0; i < layout.cell_count(); ++i) {
    const auto k = layout.kind(layout.cell_at(i));
    blocked.push_back(k == CellKind::Tunnel ? CellKind::Wall : k);
  }
  const GridLayout cut(layout.width(), layout.height(), std::move(blocked));
  const auto cut_dist = bfs(cut, layout.home_cells());
  for (Cell s : layout.source_cells()) {
    if (cut_dist[cut.index(s)] != kUnreachable) {
      throw ConfigError("grid layout: home and source connect without passing the tunnel");
    }
  }
}

DistanceField::DistanceField(const GridLayout& layout, std::span<const Cell> goals)
    : width_(layout.width()), height_(layout.height()) {
  if (goals.empty()) throw ConfigError("distance field: no goal cells");
  for (Cell g : goals) {
    if (!layout.walkable(g)) throw ConfigError("distance field: goal cell is a wall");
  }
  dist_ = bfs(layout, goals);
  for (std::size_t i = 0; i < dist_.size(); ++i) {
    if (!layout.walkable(layout.cell_at(i))) continue;
    if (dist_[i] == kUnreachable) throw ConfigError("distance field: cell unreachable from goals");
    max_finite_ = std::max(max_finite_, dist_[i]);
  }
}

int DistanceField::at(Cell c) const {
  if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) return kUnreachable;
  return dist_[static_cast<std::size_t>(c.y) * width_ + c.x];
}

}  // namespace smadrl
