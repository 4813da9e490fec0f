#include <doctest.h>

#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("veclyap_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string path(const std::string& f) const { return (dir / f).string(); }
  void write(const std::string& f, const std::string& text) const { std::ofstream(dir / f) << text; }
  std::string read(const std::string& f) const {
    std::ifstream is(dir / f);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  /// Runs the CLI with `--out dir` appended; returns the exit status.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = fmt::format("{} {} {} --out {} > {} 2> {}", env, VECLYAP_CLI, args, dir.string(),
                                        path("stdout.txt"), path("stderr.txt"));
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }
};

const char* kCascade = R"({"variables":["x1","x2"],"subsystems":[
  {"id":1,"states":["x1"],"f":["-x1"],"g":["0.5*x2"],"input_channels":["x1"]},
  {"id":2,"states":["x2"],"f":["-x2"],"g":["0"],"input_channels":["x2"]}]})";

const char* kUnstable = R"({"variables":["x1","x2"],"subsystems":[
  {"id":1,"states":["x1"],"f":["-x1"],"g":["0"],"input_channels":["x1"]},
  {"id":2,"states":["x2"],"f":["x2"],"g":["0"],"input_channels":["x2"]}]})";

const char* kSquares = R"({"certificates":[{"subsystem":1,"V":"x1^2"},{"subsystem":2,"V":"x2^2"}]})";

}  // namespace

TEST_CASE("decoupled pipeline exits 0 with the one-round schedule") {
  Workspace w("decoupled");
  REQUIRE(w.run("gen --kind decoupled --subsystems 2") == 0);
  REQUIRE(w.run("lyap") == 0);
  CHECK(w.run("certify --levels 1,1") == 0);
  CHECK(w.read("schedule.csv") == "k,S1,S2\n0,1.000000,1.000000\n1,0.000000,0.000000\n");
  CHECK(w.read("result.json").find("\"Certified\"") != std::string::npos);
  CHECK(w.run("validate --trajectories 20 --horizon 50") == 0);
  CHECK(w.run("simulate --x0 0.5,0,0,0.2 --horizon 5") == 0);
  CHECK(w.read("trace.csv").rfind("time,x11,x12,x21,x22,V1,V2\n", 0) == 0);
}

TEST_CASE("levels from an initial state") {
  Workspace w("fromx0");
  REQUIRE(w.run("gen --kind decoupled") == 0);
  REQUIRE(w.run("lyap") == 0);
  CHECK(w.run("certify --from-x0 0.3,0,0,0.3") == 0);
  CHECK(w.read("schedule.csv").find("\n1,0.000000,0.000000\n") != std::string::npos);
}

TEST_CASE("round-0 failure exits 4 and names the subsystem") {
  Workspace w("notcert");
  w.write("system.json", kUnstable);
  w.write("certificates.json", kSquares);
  CHECK(w.run("certify --levels 1,1") == 4);
  CHECK(w.read("stderr.txt").find("S2") != std::string::npos);
  CHECK(w.read("schedule.csv").find("×") != std::string::npos);
}

TEST_CASE("control exits 3 and lists controllers") {
  Workspace w("control");
  w.write("system.json", kUnstable);
  w.write("certificates.json", kSquares);
  CHECK(w.run("certify --levels 1,1 --control") == 3);
  const std::string result = w.read("result.json");
  CHECK(result.find("\"CertifiedWithControl\"") != std::string::npos);
  CHECK(result.find("controllers") != std::string::npos);
  CHECK(w.read("schedule.csv").find('*') != std::string::npos);
}

TEST_CASE("round limit exits 5") {
  Workspace w("undetermined");
  w.write("system.json", kCascade);
  w.write("certificates.json", kSquares);
  CHECK(w.run("certify --levels 1,1 --max-rounds 1") == 5);
}

TEST_CASE("usage errors exit 2") {
  Workspace w("usage");
  CHECK(w.run("") == 2);
  CHECK(w.run("certify --eps-bar -1") == 2);
  w.write("system.json", kCascade);
  w.write("certificates.json", kSquares);
  CHECK(w.run("certify --levels 1") == 2);
  w.write("bad.json", R"({"warp_factor": 9})");
  CHECK(w.run("config --config " + w.path("bad.json")) == 2);
}

TEST_CASE("missing or malformed inputs exit 6") {
  Workspace w("io");
  CHECK(w.run("lyap") == 6);
  w.write("system.json", "{ not json");
  CHECK(w.run("lyap") == 6);
  w.write("system.json", R"({"variables":["x1"],"subsystems":[{"id":1,"states":["x1"],"f":["1-x1"],"g":["0"],"input_channels":[]}]})");
  CHECK(w.run("lyap") == 6);
  CHECK(w.read("stderr.txt").find("equilibrium not at origin") != std::string::npos);
}

TEST_CASE("solver failure exits 7") {
  Workspace w("solver");
  w.write("system.json", kUnstable);
  CHECK(w.run("lyap") == 7);
  CHECK(w.read("stderr.txt").find("S2") != std::string::npos);
}

TEST_CASE("diverging simulation exits 8") {
  Workspace w("diverge");
  w.write("system.json", R"({"variables":["x1"],"subsystems":[{"id":1,"states":["x1"],"f":["x1^3"],"g":["0"],"input_channels":["x1"]}]})");
  w.write("certificates.json", R"({"certificates":[{"subsystem":1,"V":"x1^2"}]})");
  CHECK(w.run("simulate --x0 2") == 8);
}

TEST_CASE("config file overrides flags and round-trips") {
  Workspace w("config");
  w.write("cfg.json", R"({"seed": 42, "eps_bar": 0.002})");
  REQUIRE(w.run("config --seed 7 --config " + w.path("cfg.json") + " -o " + w.path("effective.json")) == 0);
  const std::string first = w.read("effective.json");
  CHECK(first.find("\"seed\": 42") != std::string::npos);
  CHECK(first.find("\"eps_bar\": 0.002") != std::string::npos);
  REQUIRE(w.run("config --config " + w.path("effective.json") + " -o " + w.path("again.json")) == 0);
  CHECK(w.read("again.json") == first);
}

TEST_CASE("environment variable sets the solver iteration cap") {
  Workspace w("env");
  REQUIRE(w.run("config -o " + w.path("c.json"), "VECLYAP_MAX_ITERS=1234") == 0);
  CHECK(w.read("c.json").find("\"max_iters\": 1234") != std::string::npos);
  CHECK(w.run("config", "VECLYAP_MAX_ITERS=lots") == 2);
}

TEST_CASE("repeated certify runs give identical schedules") {
  Workspace w("determinism");
  w.write("system.json", kCascade);
  w.write("certificates.json", kSquares);
  REQUIRE(w.run("certify --levels 1,0.8") == 0);
  const std::string first = w.read("schedule.csv");
  REQUIRE(w.run("certify --levels 1,0.8") == 0);
  CHECK(w.read("schedule.csv") == first);
}
