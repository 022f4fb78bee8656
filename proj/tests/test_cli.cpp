// Runs the command-line tool as a subprocess and inspects exit codes and
// written files.

#include <doctest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = BASISFORGE_CLI;
const std::string kData = BASISFORGE_DATA_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const char* name) {
  const fs::path d = fs::temp_directory_path() / ("bf_cli_" + std::string(name));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

long count_lines(const std::string& s) {
  long n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("fit --data x.csv").code == 2);
}

TEST_CASE("fit writes its artifacts and is reproducible") {
  const fs::path a = scratch("fit_a"), b = scratch("fit_b");
  const std::string base = "fit --config " + kData + "/fit_config.json --data " + kData + "/sample_X.csv --no-wall-time --out ";
  REQUIRE(run(base + a.string()).code == 0);
  for (const char* f : {"basis.csv", "coeffs.csv", "log.jsonl", "summary.json"}) CHECK(fs::exists(a / f));
  const json summary = json::parse(slurp(a / "summary.json"));
  CHECK(summary["atoms"] == 6);
  CHECK(summary.contains("eckartYoung"));
  CHECK(summary["coherence"].contains("mutualCoherence"));

  REQUIRE(run(base + b.string()).code == 0);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "log.jsonl") == slurp(b / "log.jsonl"));
  CHECK(slurp(a / "basis.csv") == slurp(b / "basis.csv"));

  // the environment seed and the flag agree; the flag wins over the environment
  const fs::path c = scratch("fit_c"), d = scratch("fit_d");
  REQUIRE(run(base + c.string() + " --seed 5").code == 0);
  REQUIRE(run(base + d.string(), "BASISFORGE_SEED=5").code == 0);
  CHECK(slurp(c / "log.jsonl") == slurp(d / "log.jsonl"));
  REQUIRE(run(base + d.string() + " --seed 5", "BASISFORGE_SEED=77").code == 0);
  CHECK(slurp(c / "log.jsonl") == slurp(d / "log.jsonl"));
}

TEST_CASE("fit error exits") {
  const fs::path dir = scratch("fit_err");
  write(dir / "graph.json", R"({"atoms": 3, "graphWeight": 0.5})");
  CHECK(run("fit --config " + (dir / "graph.json").string() + " --data " + kData + "/sample_X.csv --out " +
            (dir / "o").string())
            .code == 2);
  CHECK(run("fit --config " + (dir / "missing.json").string() + " --data " + kData + "/sample_X.csv --out " +
            (dir / "o").string())
            .code == 2);
  write(dir / "typo.json", R"({"atoms": 3, "atomz": 4})");
  CHECK(run("fit --config " + (dir / "typo.json").string() + " --data " + kData + "/sample_X.csv --out " +
            (dir / "o").string())
            .code == 2);

  // finite data whose squares overflow
  std::string huge;
  for (int r = 0; r < 4; ++r) huge += "1e200,1e200,1e200,1e200,1e200,1e200,1e200,1e200\n";
  write(dir / "huge.csv", huge);
  const Run r = run("fit --config " + kData + "/fit_config.json --data " + (dir / "huge.csv").string() + " --out " +
                    (dir / "h").string());
  CHECK(r.code == 3);
  CHECK(fs::exists(dir / "h" / "log.jsonl"));
}

TEST_CASE("fit-dynamic") {
  const fs::path a = scratch("dyn_a");
  const std::string base = "fit-dynamic --config " + kData + "/dynamic_config.json --data " + kData +
                           "/linear_system_X.csv --no-wall-time --out ";
  const Run r = run(base + a.string());
  REQUIRE(r.code == 0);
  for (const char* f : {"basis.csv", "states.csv", "operator.csv", "forecast.csv", "log.jsonl", "summary.json"})
    CHECK(fs::exists(a / f));
  const json summary = json::parse(slurp(a / "summary.json"));
  CHECK(summary["oneStepForecastError"].get<double>() <= 1e-6);
  const std::string fc = slurp(a / "forecast.csv");
  CHECK(count_lines(fc) == 16);
  CHECK(std::count(fc.begin(), fc.begin() + static_cast<long>(fc.find('\n')), ',') == 9);

  const fs::path b = scratch("dyn_b");
  REQUIRE(run(base + b.string() + " --horizon 0").code == 0);
  CHECK_FALSE(fs::exists(b / "forecast.csv"));
  CHECK(fs::exists(b / "operator.csv"));
}

TEST_CASE("synth") {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  const std::string args = "synth --d 24 --m 12 --s 2 --n 1500 --noise 0 --seed 7 --out ";
  REQUIRE(run(args + a.string()).code == 0);
  REQUIRE(run(args + b.string()).code == 0);
  for (const char* f : {"X.csv", "phi_star.csv", "alpha_star.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(count_lines(slurp(a / "X.csv")) == 24);
  CHECK(count_lines(slurp(a / "alpha_star.csv")) == 12);
  CHECK(run("synth --d 4 --m 3 --s 5 --n 10 --out " + a.string()).code == 2);

  const fs::path dyn = scratch("synth_dyn");
  REQUIRE(run("synth --dynamic --d 8 --m 2 --t 30 --seed 1 --out " + dyn.string()).code == 0);
  for (const char* f : {"X.csv", "phi_star.csv", "z_star.csv", "a_star.csv"}) CHECK(fs::exists(dyn / f));
}

TEST_CASE("diagnose") {
  const fs::path dir = scratch("diag");
  write(dir / "eye.csv", "1,0,0\n0,1,0\n0,0,1\n");
  const Run plain = run("diagnose --basis " + (dir / "eye.csv").string());
  REQUIRE(plain.code == 0);
  const json j = json::parse(plain.out);
  CHECK(j["mutualCoherence"] == 0.0);
  CHECK(j["maxUniqueSparsity"].is_null());
  CHECK_FALSE(j.contains("recovery"));

  const fs::path s = scratch("diag_synth"), f = scratch("diag_fit");
  REQUIRE(run("synth --d 12 --m 6 --s 2 --n 200 --seed 3 --out " + s.string()).code == 0);
  REQUIRE(run("fit --config " + kData + "/fit_config.json --data " + (s / "X.csv").string() + " --out " + f.string())
              .code == 0);
  const Run rec = run("diagnose --basis " + (f / "basis.csv").string() + " --reference " +
                      (s / "phi_star.csv").string() + " --data " + (s / "X.csv").string() + " --out " +
                      (dir / "report.json").string());
  REQUIRE(rec.code == 0);
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r["recovery"].contains("meanAbsCorrelation"));
  CHECK(r.contains("eckartYoung"));
  CHECK(run("diagnose --basis " + (dir / "nope.csv").string()).code == 2);
}

TEST_CASE("bslm train and eval") {
  const fs::path dir = scratch("bslm");
  const Run t = run("bslm train --config " + kData + "/bslm_config.json --corpus " + kData + "/cyclic.txt --out " +
                    dir.string());
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "checkpoint.json"));
  std::istringstream log(slurp(dir / "log.jsonl"));
  std::string line, last;
  long epochs = 0;
  while (std::getline(log, line)) {
    last = line;
    ++epochs;
  }
  CHECK(epochs == 20);
  CHECK(json::parse(last)["perplexity"].get<double>() <= 1.2);

  const Run e = run("bslm eval --checkpoint " + (dir / "checkpoint.json").string() + " --corpus " + kData +
                    "/cyclic.txt");
  REQUIRE(e.code == 0);
  const json ev = json::parse(e.out);
  CHECK(ev["perplexity"].get<double>() <= 1.2);
  CHECK(ev["latencyUs"].contains("p95"));

  // an untrained model predicts uniformly over its vocabulary
  const fs::path fresh = scratch("bslm_fresh");
  write(fresh / "zero.json", R"({"epochs": 0})");
  REQUIRE(run("bslm train --config " + (fresh / "zero.json").string() + " --corpus " + kData + "/uniform.txt --out " +
              fresh.string())
              .code == 0);
  const Run u = run("bslm eval --checkpoint " + (fresh / "checkpoint.json").string() + " --corpus " + kData +
                    "/uniform_eval.txt");
  REQUIRE(u.code == 0);
  const json uj = json::parse(u.out);
  const double v = uj["vocabSize"].get<double>();
  CHECK(std::abs(uj["perplexity"].get<double>() - v) <= 0.15 * v);

  CHECK(run("bslm eval --checkpoint " + (dir / "missing.json").string() + " --corpus " + kData + "/cyclic.txt").code ==
        2);
  CHECK(run("bslm eval --checkpoint " + (dir / "checkpoint.json").string() + " --corpus " +
            (dir / "missing.txt").string())
            .code == 2);
  CHECK(run("bslm train --config " + kData + "/fit_config.json --corpus " + kData + "/cyclic.txt --out " +
            dir.string())
            .code == 2);
}
