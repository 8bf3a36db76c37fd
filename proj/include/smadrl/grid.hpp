#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smadrl {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class CellKind : std::uint8_t { Wall, Floor, Home, Source, Tunnel };

// Geometry of the default arena: a home chamber and a source chamber joined
// by a one-cell-wide horizontal tunnel through their middle rows.
struct ChamberSpec {
  int home_width = 6;
  int home_height = 5;
  int source_width = 6;
  int source_height = 5;
  int tunnel_length = 8;
};

class GridLayout {
 public:
  GridLayout(int width, int height, std::vector<CellKind> kinds);

  // '#' wall, '.' floor, 'H' home, 'S' source, 'T' tunnel. Rows top to bottom.
  static GridLayout from_ascii(std::string_view art);
  static GridLayout chambers(const ChamberSpec& spec);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const { return kinds_.size(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index % width_), static_cast<int>(index / width_)};
  }
  CellKind kind(Cell c) const { return in_bounds(c) ? kinds_[index(c)] : CellKind::Wall; }
  bool walkable(Cell c) const { return kind(c) != CellKind::Wall; }

  bool is_home(Cell c) const { return kind(c) == CellKind::Home; }
  bool is_source(Cell c) const { return kind(c) == CellKind::Source; }
  bool is_tunnel(Cell c) const { return kind(c) == CellKind::Tunnel; }

  // Home cells are ordered by hop distance to the tunnel (nearest first), then
  // row-major. Agents are placed on them in this order.
  const std::vector<Cell>& home_cells() const { return home_; }
  const std::vector<Cell>& source_cells() const { return source_; }
  const std::vector<Cell>& tunnel_cells() const { return tunnel_; }
  int tunnel_length() const { return static_cast<int>(tunnel_.size()); }

  std::string to_ascii() const;

 private:
  int width_;
  int height_;
  std::vector<CellKind> kinds_;
  std::vector<Cell> home_;
  std::vector<Cell> source_;
  std::vector<Cell> tunnel_;
};

// Throws ConfigError when the arena is disconnected, lacks home/source cells,
// or the tunnel cells do not form a single width-1 corridor.
void validate_layout(const GridLayout& layout);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Breadth-first hop distances to the nearest goal cell. Wall cells hold
// kUnreachable.
class DistanceField {
 public:
  DistanceField() = default;
  DistanceField(const GridLayout& layout, std::span<const Cell> goals);

  int at(Cell c) const;
  int max_finite() const { return max_finite_; }
  const std::vector<int>& values() const { return dist_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int max_finite_ = 0;
  std::vector<int> dist_;
};

}  // namespace smadrl
