#include "smadrl/analysis.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "smadrl/errors.hpp"
#include "smadrl/format.hpp"

namespace smadrl {

LorenzCurve lorenz_points(std::span<const std::int64_t> workload) {
  if (workload.empty()) throw std::invalid_argument("lorenz: empty workload");
  std::vector<std::int64_t> sorted(workload.begin(), workload.end());
  for (auto w : sorted) {
    if (w < 0) throw std::invalid_argument("lorenz: negative workload");
  }
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t total = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0});
  const std::size_t n = sorted.size();

  LorenzCurve curve;
  curve.degenerate = total == 0;
  curve.x.reserve(n + 1);
  curve.y.reserve(n + 1);
  std::int64_t running = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    curve.x.push_back(static_cast<double>(i) / static_cast<double>(n));
    curve.y.push_back(total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(total));
    if (i < n) running += sorted[i];
  }
  return curve;
}

double gini(std::span<const std::int64_t> workload) {
  if (workload.empty()) throw std::invalid_argument("gini: empty workload");
  std::vector<std::int64_t> sorted(workload.begin(), workload.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0) throw std::invalid_argument("gini: negative workload");
  const std::int64_t total = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0});
  if (total <= 0) throw std::invalid_argument("gini: total workload must be positive");
  // Sorted form of the mean absolute difference: sum_i (2i - n - 1) x_(i).
  const auto n = static_cast<std::int64_t>(sorted.size());
  std::int64_t weighted = 0;
  for (std::int64_t i = 0; i < n; ++i) weighted += (2 * (i + 1) - n - 1) * sorted[i];
  return static_cast<double>(weighted) / (static_cast<double>(n) * static_cast<double>(total));
}

TunnelGeometry::TunnelGeometry(const GridLayout& layout)
    : layout_(&layout), home_(layout, layout.home_cells()), source_(layout, layout.source_cells()) {}

ClogDetector::ClogDetector(const GridLayout& layout, int threshold)
    : geometry_(layout), threshold_(threshold) {
  if (threshold < 1) throw std::invalid_argument("clog threshold must be positive");
}

void ClogDetector::start_episode(const StepRecord& record) {
  finish();
  active_ = true;
  episode_ = record.episode;
  prev_.clear();
  for (const auto& a : record.agents) prev_.push_back(a.position);
  // Entry sides are unknown until an agent is seen entering the tunnel.
  entry_side_.assign(record.agents.size(), -1);
  stall_ = 0;
  open_ = false;
}

void ClogDetector::feed(const StepRecord& record) {
  bool traversal = false;
  if (!active_ || record.episode != episode_ || record.agents.size() != prev_.size()) {
    start_episode(record);
  } else {
    for (std::size_t i = 0; i < record.agents.size(); ++i) {
      const Cell from = prev_[i];
      const Cell to = record.agents[i].position;
      const bool was_in = geometry_.in_tunnel(from);
      const bool now_in = geometry_.in_tunnel(to);
      if (!was_in && now_in) {
        entry_side_[i] = geometry_.home_side(from) ? 0 : 1;
      } else if (was_in && !now_in) {
        const int exit_side = geometry_.home_side(to) ? 0 : 1;
        if (entry_side_[i] >= 0 && exit_side != entry_side_[i]) traversal = true;
        entry_side_[i] = -1;
      }
      prev_[i] = to;
    }
  }
  last_step_ = record.step;

  int occupancy = 0;
  for (const auto& a : record.agents) occupancy += geometry_.in_tunnel(a.position) ? 1 : 0;

  if (open_) {
    if (traversal) {
      events_.push_back({episode_, stall_start_, record.step - stall_start_});
      open_ = false;
      stall_ = 0;
    }
    return;
  }
  if (occupancy >= 2 && !traversal) {
    if (stall_ == 0) stall_start_ = record.step;
    if (++stall_ >= threshold_) open_ = true;
  } else {
    stall_ = 0;
  }
}

void ClogDetector::finish() {
  if (active_ && open_) {
    events_.push_back({episode_, stall_start_, last_step_ - stall_start_ + 1});
  }
  open_ = false;
  stall_ = 0;
  active_ = false;
}

std::vector<ClogEvent> detect_clogs(const GridLayout& layout, std::span<const StepRecord> trace,
                                    int threshold) {
  ClogDetector detector(layout, threshold);
  for (const auto& r : trace) detector.feed(r);
  detector.finish();
  return detector.events();
}

StrategyFractions classify_strategy(const GridLayout& layout, std::span<const StepRecord> trace,
                                    int oat_max_occupancy) {
  StrategyFractions out;
  if (trace.empty()) return out;
  const TunnelGeometry geo(layout);
  std::int64_t oat_steps = 0;
  std::int64_t active_steps = 0;
  std::int64_t bb_steps = 0;
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const StepRecord& r = trace[s];
    int occupancy = 0;
    for (const auto& a : r.agents) occupancy += geo.in_tunnel(a.position) ? 1 : 0;
    if (occupancy <= oat_max_occupancy) ++oat_steps;

    const bool has_prev = s > 0 && trace[s - 1].episode == r.episode &&
                          trace[s - 1].agents.size() == r.agents.size();
    if (occupancy == 0 || !has_prev) continue;
    ++active_steps;
    const StepRecord& p = trace[s - 1];
    bool laden_homeward = false;
    bool unladen_sourceward = false;
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
      const Cell from = p.agents[i].position;
      const Cell to = r.agents[i].position;
      if (from == to) continue;
      if (!geo.in_tunnel(from) && !geo.in_tunnel(to)) continue;
      const bool laden = p.agents[i].laden;
      if (laden && geo.home_distance(to) < geo.home_distance(from)) laden_homeward = true;
      if (!laden && geo.source_distance(to) < geo.source_distance(from)) unladen_sourceward = true;
    }
    if (laden_homeward && unladen_sourceward) ++bb_steps;
  }
  out.oat = static_cast<double>(oat_steps) / static_cast<double>(trace.size());
  out.bb = active_steps == 0 ? 0.0 : static_cast<double>(bb_steps) / static_cast<double>(active_steps);
  return out;
}

EpisodeMetrics episode_metrics(const GridLayout& layout, std::span<const StepRecord> episode,
                               const AnalysisConfig& config) {
  EpisodeMetrics m;
  if (episode.empty()) return m;
  const std::size_t n = episode.front().agents.size();
  m.episode = episode.front().episode;
  m.workload.assign(n, 0);
  m.tunnel_occupancy_histogram.assign(n + 1, 0);
  for (const auto& r : episode) {
    int occupancy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = r.agents[i];
      if (a.delivered_trip) ++m.workload[i];
      if (a.collided) ++m.collisions;
      if (layout.is_tunnel(a.position)) ++occupancy;
    }
    ++m.tunnel_occupancy_histogram[occupancy];
  }
  m.total_pellets = std::accumulate(m.workload.begin(), m.workload.end(), std::int64_t{0});
  m.gini = m.total_pellets > 0 ? gini(m.workload) : 0.0;
  m.clog_events = static_cast<std::int64_t>(detect_clogs(layout, episode, config.clog_threshold).size());
  const auto strategy = classify_strategy(layout, episode, config.oat_max_occupancy);
  m.oat_fraction = strategy.oat;
  m.bb_fraction = strategy.bb;
  return m;
}

std::vector<EpisodeMetrics> trace_metrics(const GridLayout& layout, std::span<const StepRecord> trace,
                                          const AnalysisConfig& config) {
  std::vector<EpisodeMetrics> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= trace.size(); ++i) {
    if (i == trace.size() || trace[i].episode != trace[begin].episode) {
      out.push_back(episode_metrics(layout, trace.subspan(begin, i - begin), config));
      begin = i;
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics) {
  const std::size_t n = metrics.empty() ? 0 : metrics.front().workload.size();
  out << "episode,total_pellets,gini,collisions,clog_events,oat_fraction,bb_fraction";
  for (std::size_t i = 0; i < n; ++i) out << ",agent_" << i;
  out << '\n';
  for (const auto& m : metrics) {
    if (m.workload.size() != n) throw std::invalid_argument("metrics: team size changes between rows");
    out << m.episode << ',' << m.total_pellets << ',' << format_double(m.gini) << ',' << m.collisions
        << ',' << m.clog_events << ',' << format_double(m.oat_fraction) << ','
        << format_double(m.bb_fraction);
    for (auto w : m.workload) out << ',' << w;
    out << '\n';
  }
}

std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("metrics csv: empty file");
  const auto header = split(line, ',');
  static const std::vector<std::string> kFixed{"episode",     "total_pellets", "gini",
                                               "collisions",  "clog_events",   "oat_fraction",
                                               "bb_fraction"};
  if (header.size() < kFixed.size() || !std::equal(kFixed.begin(), kFixed.end(), header.begin())) {
    throw IoError("metrics csv: unexpected header");
  }
  const std::size_t agents = header.size() - kFixed.size();
  std::vector<EpisodeMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) {
      throw IoError("metrics csv: line " + std::to_string(line_no) + " has the wrong field count");
    }
    try {
      EpisodeMetrics m;
      m.episode = static_cast<int>(parse_int(f[0]));
      m.total_pellets = parse_int(f[1]);
      m.gini = parse_double(f[2]);
      m.collisions = parse_int(f[3]);
      m.clog_events = parse_int(f[4]);
      m.oat_fraction = parse_double(f[5]);
      m.bb_fraction = parse_double(f[6]);
      for (std::size_t i = 0; i < agents; ++i) m.workload.push_back(parse_int(f[kFixed.size() + i]));
      rows.push_back(std::move(m));
    } catch (const std::invalid_argument& e) {
      throw IoError("metrics csv: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

LorenzEntry make_lorenz_entry(Workload workload, std::string window) {
  LorenzEntry e;
  e.curve = lorenz_points(workload);
  const std::int64_t total = std::accumulate(workload.begin(), workload.end(), std::int64_t{0});
  e.gini = total > 0 ? gini(workload) : 0.0;
  e.workload = std::move(workload);
  e.window = std::move(window);
  return e;
}

void write_lorenz_json(std::ostream& out, const LorenzReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [team, entry] : report) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < entry.curve.x.size(); ++i) {
      points.push_back({entry.curve.x[i], entry.curve.y[i]});
    }
    j[std::to_string(team)] = {{"workload", entry.workload},
                               {"points", points},
                               {"gini", entry.gini},
                               {"degenerate", entry.curve.degenerate},
                               {"window", entry.window}};
  }
  out << j.dump(2) << '\n';
}

LorenzReport read_lorenz_json(std::istream& in) {
  LorenzReport report;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [key, value] : j.items()) {
      LorenzEntry e;
      e.workload = value.at("workload").get<Workload>();
      for (const auto& p : value.at("points")) {
        e.curve.x.push_back(p.at(0).get<double>());
        e.curve.y.push_back(p.at(1).get<double>());
      }
      e.curve.degenerate = value.at("degenerate").get<bool>();
      e.gini = value.at("gini").get<double>();
      e.window = value.at("window").get<std::string>();
      report[static_cast<int>(parse_int(key))] = std::move(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("lorenz json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("lorenz json: ") + e.what());
  }
  return report;
}

}  // namespace smadrl
