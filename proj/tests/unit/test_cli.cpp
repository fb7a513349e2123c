#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "touchdigits/models/models.hpp"
#include "touchdigits/nn/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace touchdigits;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
  std::vector<json> lines;  // stdout lines that parse as JSON
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "touchdigits_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI in `cwd` with a clean TOUCHDIGITS_* environment plus `env`.
Run cli(const fs::path& cwd, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + cwd.string() + "' && env -u TOUCHDIGITS_SEED -u TOUCHDIGITS_OUT " + env + " '" +
                          TOUCHDIGITS_CLI + "' " + args + " > .stdout 2> .stderr";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(cwd / ".stdout");
  r.err = slurp(cwd / ".stderr");
  fs::remove(cwd / ".stdout");
  fs::remove(cwd / ".stderr");
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.front() == '{') r.lines.push_back(json::parse(line));
  }
  return r;
}

json error_of(const Run& r) { return json::parse(r.err.substr(r.err.find('{'))); }

std::vector<fs::path> entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

const std::string kTrain = "train --model polar1d --input both --dataset d.json --seed 7 --max-epochs 2 --out runs";

}  // namespace

TEST_CASE("audit prints the reference table and exits 0") {
  const auto dir = workdir("audit");
  auto r = cli(dir, "audit --model bitmap2d --out runs");
  CHECK(r.code == 0);
  CHECK(r.lines.front()["command"] == "audit");
  CHECK(r.out.find("total parameters 1663370 (expected 1663370)") != std::string::npos);
  CHECK(r.out.find("audit passed") != std::string::npos);
  const fs::path run_dir = r.lines.back()["run_dir"].get<std::string>();
  CHECK(fs::exists(dir / run_dir / "audit.json"));

  r = cli(dir, "audit --model polar1d --input angle --out runs");
  CHECK(r.code == 0);
  CHECK(r.out.find("total parameters 287530 (expected 287530)") != std::string::npos);
}

TEST_CASE("audit of a checkpoint with a wrong architecture exits 4") {
  const auto dir = workdir("audit_fail");
  auto spec = models::build_polar_model(preprocess::PolarInput::both);
  spec.layers[0].feature_count = 16;
  nn::Network<float> net(spec);
  net.initialize(1);
  nn::save_checkpoint(nn::make_checkpoint(net), dir / "bad.tdck");
  const auto r = cli(dir, "audit --checkpoint bad.tdck --out runs");
  CHECK(r.code == 4);
  CHECK(error_of(r)["error"] == "audit_failed");
  CHECK(error_of(r)["exit_code"] == 4);
}

TEST_CASE("synth is byte-identical for the same seed") {
  const auto dir = workdir("synth");
  REQUIRE(cli(dir, "synth --count 1000 --seed 7 --out a.json").code == 0);
  REQUIRE(cli(dir, "synth --count 1000 --seed 7 --out b.json").code == 0);
  REQUIRE(cli(dir, "synth --count 1000 --seed 8 --out c.json").code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.json") != slurp(dir / "c.json"));
  const auto d = json::parse(slurp(dir / "a.json"));
  CHECK(d["glyphs"].size() == 1000);
  // synth writes exactly the requested file
  CHECK(entries(dir) == std::vector<fs::path>{"a.json", "b.json", "c.json"});
}

TEST_CASE("train writes checkpoint and history into one run directory") {
  const auto dir = workdir("train");
  REQUIRE(cli(dir, "synth --count 200 --seed 3 --out d.json").code == 0);
  const auto r = cli(dir, kTrain);
  REQUIRE(r.code == 0);
  const auto& config = r.lines.front();
  CHECK(config["command"] == "train");
  CHECK(config["config"]["train"]["seed"] == 7);
  CHECK(config["config"]["train"]["split_seed"] == 1);
  CHECK(config["config"]["train"]["max_epochs"] == 2);
  CHECK(entries(dir) == std::vector<fs::path>{"d.json", "runs"});
  const auto runs = entries(dir / "runs");
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].string().rfind("train-", 0) == 0);
  CHECK(runs[0].string().size() > std::string("-seed7").size());
  CHECK(runs[0].string().substr(runs[0].string().size() - 6) == "-seed7");
  CHECK(entries(dir / "runs" / runs[0]) ==
        std::vector<fs::path>{"config.json", "history.csv", "metrics.json", "model.tdck", "report.json"});
  const auto history = slurp(dir / "runs" / runs[0] / "history.csv");
  CHECK(history.rfind("epoch,train_loss,val_accuracy,lr_eff\n1,", 0) == 0);
  CHECK(std::count(history.begin(), history.end(), '\n') == 3);
  CHECK(nn::load_checkpoint(dir / "runs" / runs[0] / "model.tdck").spec.name == "polar1d");
}

TEST_CASE("two identical train invocations give bit-identical checkpoints") {
  const auto dir = workdir("determinism");
  REQUIRE(cli(dir, "synth --count 200 --seed 3 --out d.json").code == 0);
  const auto a = cli(dir, kTrain);
  const auto b = cli(dir, kTrain);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string ca = a.lines.back()["checkpoint"];
  const std::string cb = b.lines.back()["checkpoint"];
  CHECK(ca != cb);
  CHECK(slurp(dir / ca) == slurp(dir / cb));
}

TEST_CASE("eval, curve, gallery, stats and ablate write their artifacts") {
  const auto dir = workdir("downstream");
  REQUIRE(cli(dir, "synth --count 200 --seed 3 --out d.json").code == 0);
  const auto t = cli(dir, kTrain);
  REQUIRE(t.code == 0);
  const std::string ck = t.lines.back()["checkpoint"];

  const auto e = cli(dir, "eval --checkpoint " + ck + " --dataset d.json --out runs");
  REQUIRE(e.code == 0);
  CHECK(e.lines.back()["accuracy"] == t.lines.back()["report"]["test_accuracy"]);

  const auto c = cli(dir, "curve --checkpoint " + ck + " --dataset d.json --fractions 0,0.5,1 --out runs");
  REQUIRE(c.code == 0);
  const auto& points = c.lines.back()["curve"]["points"];
  REQUIRE(points.size() == 3);
  CHECK(points[2]["accuracy"] == e.lines.back()["accuracy"]);
  const fs::path curve_dir = dir / c.lines.back()["run_dir"].get<std::string>();
  CHECK(fs::exists(curve_dir / "curve.csv"));
  CHECK(fs::exists(curve_dir / "curve.png"));

  const auto g = cli(dir, "gallery --checkpoint " + ck + " --dataset d.json --k 4 --out runs");
  REQUIRE(g.code == 0);
  CHECK(fs::exists(dir / g.lines.back()["run_dir"].get<std::string>() / "gallery.png"));

  const auto s = cli(dir, "stats --dataset d.json --out runs");
  REQUIRE(s.code == 0);
  CHECK(s.lines.back()["stats"]["glyph_count"] == 200);

  const auto a = cli(dir, "ablate --dataset d.json --seed 2 --max-epochs 1 --out runs");
  REQUIRE(a.code == 0);
  const auto& rows = a.lines.back()["ablation"]["rows"];
  REQUIRE(rows.size() == 3);
  CHECK(rows[0]["input_mode"] == "distance");
  CHECK(rows[2]["parameters"] == 287690);

  CHECK(entries(dir) == std::vector<fs::path>{"d.json", "runs"});
}

TEST_CASE("infer-file answers a request and rejects a single point") {
  const auto dir = workdir("infer");
  REQUIRE(cli(dir, "synth --count 200 --seed 3 --out d.json").code == 0);
  const auto t = cli(dir, kTrain);
  REQUIRE(t.code == 0);
  const std::string ck = t.lines.back()["checkpoint"];
  std::ofstream(dir / "ok.json")
      << R"({"model":"polar1d","strokes":[[{"x":0,"y":0,"t":0},{"x":10,"y":5,"t":16},{"x":20,"y":30,"t":32}]]})";
  std::ofstream(dir / "dot.json") << R"({"model":"polar1d","strokes":[[{"x":0,"y":0,"t":0}]]})";
  const auto ok = cli(dir, "infer-file --checkpoint " + ck + " --request ok.json");
  REQUIRE(ok.code == 0);
  const auto& res = ok.lines.back();
  CHECK(res["probabilities"].size() == 10);
  CHECK(res["top"].get<int>() >= 0);
  CHECK(res["top"].get<int>() <= 9);
  const auto dot = cli(dir, "infer-file --checkpoint " + ck + " --request dot.json");
  CHECK(dot.code == 2);
  CHECK(error_of(dot)["error"] == "insufficient_input");
}

TEST_CASE("failures map to distinct exit codes with a one-line JSON error") {
  const auto dir = workdir("errors");
  std::ofstream(dir / "broken.json") << R"({"version":1,"subjects":[],"glyphs":[{"id":0}]})";

  auto r = cli(dir, "train --bogus");
  CHECK(r.code == 2);
  CHECK(error_of(r)["error"] == "usage");
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(cli(dir, "").code == 2);
  CHECK(cli(dir, "train --input sideways --dataset d.json").code == 2);
  CHECK(cli(dir, "curve --checkpoint x --dataset y --fractions 0,abc").code == 2);

  r = cli(dir, "train --dataset missing.json --out runs");
  CHECK(r.code == 3);
  CHECK(error_of(r)["error"] == "io_error");
  r = cli(dir, "stats --dataset broken.json --out runs");
  CHECK(r.code == 6);
  CHECK(error_of(r)["error"] == "format_error");
  CHECK(cli(dir, "eval --checkpoint missing.tdck --dataset broken.json").code == 3);
}

TEST_CASE("environment overrides defaults and flags override the environment") {
  const auto dir = workdir("env");
  auto r = cli(dir, "synth --count 10 --out a.json", "TOUCHDIGITS_SEED=9");
  CHECK(r.lines.front()["config"]["seed"] == 9);
  r = cli(dir, "synth --count 10 --seed 3 --out a.json", "TOUCHDIGITS_SEED=9");
  CHECK(r.lines.front()["config"]["seed"] == 3);
  r = cli(dir, "synth --count 10 --out a.json");
  CHECK(r.lines.front()["config"]["seed"] == 1);
  r = cli(dir, "audit --model polar1d", "TOUCHDIGITS_INPUT=angle TOUCHDIGITS_OUT=elsewhere");
  CHECK(r.lines.front()["config"]["input"] == "angle");
  CHECK(fs::is_directory(dir / "elsewhere"));
}
