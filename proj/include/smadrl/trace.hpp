#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smadrl/env.hpp"

namespace smadrl {

struct AgentRecord {
  Cell position;
  AgentMode mode = AgentMode::GoingToDig;
  bool laden = false;
  Action action = Action::Stop;
  double reward = 0.0;
  bool picked_up = false;
  bool delivered_trip = false;
  bool collided = false;
};

// State after one environment step. `step` counts from 1.
struct StepRecord {
  int episode = 0;
  int step = 0;
  std::vector<AgentRecord> agents;
};

StepRecord make_step_record(const Env& env, int episode);

// Newline-delimited JSON, one record per line.
std::string to_json_line(const StepRecord& record);
StepRecord parse_trace_line(std::string_view line);  // throws IoError on malformed input

void write_trace(std::ostream& out, std::span<const StepRecord> records);
std::vector<StepRecord> read_trace(std::istream& in);

}  // namespace smadrl
