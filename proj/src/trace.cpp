#include "smadrl/trace.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "smadrl/errors.hpp"
#include "smadrl/format.hpp"

namespace smadrl {

StepRecord make_step_record(const Env& env, int episode) {
  StepRecord r;
  r.episode = episode;
  r.step = env.step_index();
  const auto& agents = env.agents();
  r.agents.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    AgentRecord a;
    a.position = agents[i].position;
    a.mode = agents[i].mode;
    a.laden = agents[i].laden;
    a.action = env.last_actions()[i];
    a.reward = env.last_rewards()[i];
    a.picked_up = env.last_events()[i].picked_up;
    a.delivered_trip = env.last_events()[i].delivered_trip;
    a.collided = env.last_events()[i].collided;
    r.agents.push_back(a);
  }
  return r;
}

std::string to_json_line(const StepRecord& record) {
  // Written by hand so the byte layout stays fixed.
  std::string s = "{\"episode\":" + std::to_string(record.episode) +
                  ",\"step\":" + std::to_string(record.step) + ",\"agents\":[";
  for (std::size_t i = 0; i < record.agents.size(); ++i) {
    const AgentRecord& a = record.agents[i];
    if (i) s += ',';
    s += "{\"x\":" + std::to_string(a.position.x) + ",\"y\":" + std::to_string(a.position.y) +
         ",\"mode\":\"" + std::string(to_string(a.mode)) + "\",\"laden\":" + (a.laden ? "1" : "0") +
         ",\"action\":\"" + std::string(to_string(a.action)) +
         "\",\"reward\":" + format_double(a.reward) + ",\"pickup\":" + (a.picked_up ? "1" : "0") +
         ",\"trip\":" + (a.delivered_trip ? "1" : "0") + ",\"collided\":" + (a.collided ? "1" : "0") +
         "}";
  }
  s += "]}";
  return s;
}

StepRecord parse_trace_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    StepRecord r;
    r.episode = j.at("episode").get<int>();
    r.step = j.at("step").get<int>();
    for (const auto& ja : j.at("agents")) {
      AgentRecord a;
      a.position = {ja.at("x").get<int>(), ja.at("y").get<int>()};
      const auto mode = parse_mode(ja.at("mode").get<std::string>());
      const auto action = parse_action(ja.at("action").get<std::string>());
      if (!mode || !action) throw IoError("trace: unknown mode or action name");
      a.mode = *mode;
      a.action = *action;
      a.laden = ja.at("laden").get<int>() != 0;
      a.reward = ja.at("reward").get<double>();
      a.picked_up = ja.at("pickup").get<int>() != 0;
      a.delivered_trip = ja.at("trip").get<int>() != 0;
      a.collided = ja.at("collided").get<int>() != 0;
      r.agents.push_back(a);
    }
    if (r.agents.empty()) throw IoError("trace: record without agents");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("trace: malformed record: ") + e.what());
  }
}

void write_trace(std::ostream& out, std::span<const StepRecord> records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<StepRecord> read_trace(std::istream& in) {
  std::vector<StepRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_trace_line(line));
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (records.back().agents.size() != records.front().agents.size()) {
      throw IoError("line " + std::to_string(line_no) + ": agent count changes within trace");
    }
  }
  return records;
}

}  // namespace smadrl
