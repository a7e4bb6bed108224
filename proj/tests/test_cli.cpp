#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FLEET_PRICER_BIN) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

struct Workspace {
  fs::path dir = fs::temp_directory_path() / "fleetpricer_cli";
  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "small.json") << R"({
      "scenario": {"pickup_days": 7, "max_abt": 7, "max_lor": 3, "peak_rows": [5],
                   "fleet": 90, "offer_rate": 4.0},
      "history_days": 42, "batch_days": 2, "monte_carlo_samples": 2000,
      "forecaster": {"window": 14},
      "estimation": {"lor_edges": [1, 2], "abt_edges": [0, 3], "tvc_min_periods": 4}
    })";
    std::ofstream(dir / "typo.json") << R"({"optimiser": {}})";
    std::ofstream(dir / "broken.json") << "{";
    std::ofstream(dir / "bad.csv") << "booking_date,pickup_date\n2024-01-01,2024-01-02\n";
  }
  std::string cfg(const char* name) const { return "--config " + (dir / name).string(); }
  std::string out(const char* name) const { return "--out " + (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli exit codes and outputs") {
  Workspace w;
  SUBCASE("success paths") {
    CHECK(run("simulate " + w.cfg("small.json") + " " + w.out("sim")) == 0);
    CHECK(fs::exists(w.dir / "sim" / "records.csv"));
    CHECK(fs::exists(w.dir / "sim" / "run.json"));
    CHECK(fs::exists(w.dir / "sim" / "run_meta.json"));
    CHECK(run("estimate " + w.cfg("small.json") + " " + w.out("est")) == 0);
    CHECK(run("forecast " + w.cfg("small.json") + " " + w.out("fc")) == 0);
    CHECK(fs::exists(w.dir / "fc" / "forecast.csv"));
    CHECK(run("optimize " + w.cfg("small.json") + " " + w.out("opt") + " --set optimizer.band=[0.1,3]") == 0);
    CHECK(fs::exists(w.dir / "opt" / "policy.csv"));
    CHECK(run("benchmark " + w.cfg("small.json") + " " + w.out("bm") + " --set optimizer.band=[0.1,3]") == 0);
    CHECK(fs::exists(w.dir / "bm" / "benchmark.csv"));
    CHECK(fs::exists(w.dir / "bm" / "report.svg"));
    CHECK(run("opportunity-cost " + w.cfg("small.json") + " " + w.out("oc") + " --set optimizer.band=[0.1,3]") == 0);
    CHECK(run("batch " + w.cfg("small.json") + " " + w.out("b") + " --seed 3") == 0);
    for (const char* f : {"records.csv", "forecast.csv", "policy.csv", "benchmark.csv", "report.svg", "run.json"}) {
      CHECK(fs::exists(w.dir / "b" / f));
    }
    std::ifstream in(w.dir / "b" / "run.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["config"]["seed"] == 3);
    // timestamps live only in the metadata file
    std::ifstream rj(w.dir / "b" / "run.json");
    const std::string body((std::istreambuf_iterator<char>(rj)), std::istreambuf_iterator<char>());
    CHECK(body.find("created") == std::string::npos);
  }
  SUBCASE("config errors exit 2") {
    CHECK(run("batch " + w.cfg("typo.json")) == 2);
    CHECK(run("batch " + w.cfg("broken.json")) == 2);
    CHECK(run("batch " + w.cfg("missing.json")) == 2);
    CHECK(run("batch " + w.cfg("small.json") + " --set optimizer.box=[1.2,0.8]") == 2);
    CHECK(run("batch") == 2);
    CHECK(run("frobnicate " + w.cfg("small.json")) == 2);
  }
  SUBCASE("data errors exit 3") {
    CHECK(run("batch " + w.cfg("small.json") + " " + w.out("d") + " --set input_records=" +
              (w.dir / "bad.csv").string()) == 3);
    CHECK(run("batch " + w.cfg("small.json") + " " + w.out("d") + " --set input_records=" +
              (w.dir / "nope.csv").string()) == 3);
    // too little history for the forecaster window
    CHECK(run("forecast " + w.cfg("small.json") + " " + w.out("d") + " --set history_days=10") == 3);
  }
}
