#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "smadrl/grid.hpp"
#include "smadrl/trace.hpp"

namespace smadrl {

using Workload = std::vector<std::int64_t>;

// Points (i/n, share of the i smallest workloads), i = 0..n.
struct LorenzCurve {
  std::vector<double> x;
  std::vector<double> y;
  bool degenerate = false;  // all-zero workload: y is identically zero
};

LorenzCurve lorenz_points(std::span<const std::int64_t> workload);

// sum_i sum_j |x_i - x_j| / (2 n^2 mean). Requires a positive total.
double gini(std::span<const std::int64_t> workload);

struct AnalysisConfig {
  int clog_threshold = 200;  // K: stalled steps before a clog opens
  int oat_max_occupancy = 2;
};

struct ClogEvent {
  int episode = 0;
  int start = 0;     // first stalled step
  int duration = 0;  // steps from start until the closing traversal
};

// Which side of the tunnel a cell is on, by path distance.
class TunnelGeometry {
 public:
  explicit TunnelGeometry(const GridLayout& layout);

  bool in_tunnel(Cell c) const { return layout_->is_tunnel(c); }
  bool home_side(Cell c) const { return home_.at(c) < source_.at(c); }
  int home_distance(Cell c) const { return home_.at(c); }
  int source_distance(Cell c) const { return source_.at(c); }

 private:
  const GridLayout* layout_;
  DistanceField home_;
  DistanceField source_;
};

// Streaming clog detection. A clog opens once at least two agents sit in the
// tunnel with no completed traversal for K consecutive steps, and closes at
// the next traversal or at the end of the episode.
class ClogDetector {
 public:
  ClogDetector(const GridLayout& layout, int threshold);

  void feed(const StepRecord& record);
  // Closes any open event; call at episode end.
  void finish();
  const std::vector<ClogEvent>& events() const { return events_; }

 private:
  void start_episode(const StepRecord& record);

  TunnelGeometry geometry_;
  int threshold_;
  std::vector<ClogEvent> events_;
  bool active_ = false;
  int episode_ = 0;
  int last_step_ = 0;
  std::vector<Cell> prev_;
  std::vector<int> entry_side_;  // -1 unknown, 0 home, 1 source
  int stall_ = 0;
  int stall_start_ = 0;
  bool open_ = false;
};

std::vector<ClogEvent> detect_clogs(const GridLayout& layout, std::span<const StepRecord> trace,
                                    int threshold = 200);

struct StrategyFractions {
  double oat = 0.0;  // share of steps with tunnel occupancy <= oat_max_occupancy
  double bb = 0.0;   // share of tunnel-active steps with two-way laden/unladen flow
};

StrategyFractions classify_strategy(const GridLayout& layout, std::span<const StepRecord> trace,
                                    int oat_max_occupancy = 2);

struct EpisodeMetrics {
  int episode = 0;
  std::int64_t total_pellets = 0;
  Workload workload;
  double gini = 0.0;  // 0 when no pellets were delivered
  std::int64_t collisions = 0;
  std::int64_t clog_events = 0;
  double oat_fraction = 0.0;
  double bb_fraction = 0.0;
  std::vector<std::int64_t> tunnel_occupancy_histogram;  // index = agents in tunnel
};

// Metrics for one episode's records.
EpisodeMetrics episode_metrics(const GridLayout& layout, std::span<const StepRecord> episode,
                               const AnalysisConfig& config = {});
// Splits a multi-episode trace by episode index.
std::vector<EpisodeMetrics> trace_metrics(const GridLayout& layout, std::span<const StepRecord> trace,
                                          const AnalysisConfig& config = {});

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in);

struct LorenzEntry {
  Workload workload;
  LorenzCurve curve;
  double gini = 0.0;
  std::string window;
};
using LorenzReport = std::map<int, LorenzEntry>;  // keyed by team size

LorenzEntry make_lorenz_entry(Workload workload, std::string window);
void write_lorenz_json(std::ostream& out, const LorenzReport& report);
LorenzReport read_lorenz_json(std::istream& in);

}  // namespace smadrl
