#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "smadrl/analysis.hpp"
#include "smadrl/trace.hpp"

namespace fs = std::filesystem;
using namespace smadrl;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("smadrl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stderr captured; returns the exit status.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SMADRL_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kConfig = R"({
  "method": "IQL_GS",
  "env": {"home_width": 3, "home_height": 3, "source_width": 3, "source_height": 3,
          "tunnel_length": 2, "num_agents": 2, "episode_length": 40},
  "learner": {"hidden": [16], "batch_size": 8, "learn_start": 20, "buffer_capacity": 500},
  "run": {"episodes": 2}
})";

}  // namespace

TEST_CASE("cli train") {
  const auto dir = scratch("train");
  write(dir / "c.json", kConfig);
  SUBCASE("valid config") {
    CHECK(run("train " + (dir / "c.json").string() + " --seed 7 --out " + (dir / "a").string(), dir / "log") == 0);
    CHECK(fs::exists(dir / "a" / "checkpoint.ckpt"));
    CHECK(fs::exists(dir / "a" / "train_log.csv"));
    CHECK(fs::exists(dir / "a" / "train_log.timing.csv"));
    CHECK(run("train " + (dir / "c.json").string() + " --seed 7 --out " + (dir / "b").string(), dir / "log") == 0);
    CHECK(slurp(dir / "a" / "checkpoint.ckpt") == slurp(dir / "b" / "checkpoint.ckpt"));
    CHECK(slurp(dir / "a" / "train_log.csv") == slurp(dir / "b" / "train_log.csv"));
  }
  SUBCASE("unknown key") {
    write(dir / "bad.json", R"({"env": {"tunel_length": 4}})");
    CHECK(run("train " + (dir / "bad.json").string() + " --out " + (dir / "x").string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("env.tunel_length") != std::string::npos);
  }
  SUBCASE("missing config") {
    CHECK(run("train " + (dir / "none.json").string(), dir / "log") == 4);
  }
  SUBCASE("bad arguments") {
    CHECK(run("train", dir / "log") == 2);
    CHECK(run("frobnicate", dir / "log") == 2);
  }
  SUBCASE("several seeds") {
    CHECK(run("train " + (dir / "c.json").string() + " --seeds 1,2 --out " + (dir / "m").string(), dir / "log") == 0);
    CHECK(fs::exists(dir / "m" / "seed_1" / "checkpoint.ckpt"));
    CHECK(fs::exists(dir / "m" / "seed_2" / "checkpoint.ckpt"));
  }
}

TEST_CASE("cli eval and analyze") {
  const auto dir = scratch("eval");
  write(dir / "c.json", kConfig);
  REQUIRE(run("train " + (dir / "c.json").string() + " --seed 1 --out " + (dir / "t").string(), dir / "log") == 0);
  const std::string ckpt = (dir / "t" / "checkpoint.ckpt").string();

  SUBCASE("smoke with trace") {
    CHECK(run("eval " + ckpt + " --episodes 3 --steps 25 --seed 2 --out " + (dir / "e").string() +
                  " --trace " + (dir / "trace.ndjson").string(),
              dir / "log") == 0);
    std::ifstream in(dir / "trace.ndjson");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 3 * 25);
    CHECK(fs::exists(dir / "e" / "metrics.csv"));
    CHECK(fs::exists(dir / "e" / "lorenz.json"));

    CHECK(run("analyze --trace " + (dir / "trace.ndjson").string() + " --config " + (dir / "c.json").string() +
                  " --out " + (dir / "a").string(),
              dir / "log") == 0);
    CHECK(fs::exists(dir / "a" / "clogs.csv"));
    // Metrics recomputed from the trace equal the ones eval wrote.
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "e" / "metrics.csv"));
  }
  SUBCASE("missing checkpoint") {
    CHECK(run("eval " + (dir / "nope.ckpt").string() + " --out " + (dir / "e").string(), dir / "log") == 4);
  }
  SUBCASE("mismatched config") {
    write(dir / "other.json", R"({"env": {"num_agents": 3, "home_width": 3, "home_height": 3,
        "source_width": 3, "source_height": 3, "tunnel_length": 2}})");
    CHECK(run("eval " + ckpt + " --config " + (dir / "other.json").string() + " --out " + (dir / "e").string(),
              dir / "log") == 2);
  }
  SUBCASE("analyze equal workload") {
    // Synthetic two-agent trace where both deliver once.
    StepRecord r{0, 1, {}};
    AgentRecord a;
    a.position = {0, 0};
    a.delivered_trip = true;
    r.agents = {a, a};
    r.agents[1].position = {1, 0};
    std::ostringstream out;
    write_trace(out, std::vector{r});
    write(dir / "eq.ndjson", out.str());
    CHECK(run("analyze --trace " + (dir / "eq.ndjson").string() + " --config " + (dir / "c.json").string() +
                  " --out " + (dir / "q").string(),
              dir / "log") == 0);
    std::ifstream in(dir / "q" / "lorenz.json");
    const auto report = read_lorenz_json(in);
    REQUIRE(report.count(2));
    const auto& e = report.at(2);
    CHECK(e.gini == 0.0);
    CHECK(e.curve.x.front() == 0.0);
    CHECK(e.curve.y.front() == 0.0);
    CHECK(e.curve.x.back() == 1.0);
    CHECK(e.curve.y.back() == 1.0);
  }
  SUBCASE("analyze metrics files") {
    REQUIRE(run("eval " + ckpt + " --episodes 2 --steps 20 --out " + (dir / "e2").string(), dir / "log") == 0);
    CHECK(run("analyze --metrics " + (dir / "e2" / "metrics.csv").string() + " --out " + (dir / "m").string(),
              dir / "log") == 0);
    CHECK(fs::exists(dir / "m" / "lorenz.json"));
  }
  SUBCASE("malformed trace") {
    write(dir / "bad.ndjson", "{\"episode\": 0, \"step\": \n");
    CHECK(run("analyze --trace " + (dir / "bad.ndjson").string() + " --config " + (dir / "c.json").string() +
                  " --out " + (dir / "b").string(),
              dir / "log") == 4);
  }
}
