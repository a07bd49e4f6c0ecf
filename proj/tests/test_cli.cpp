#include <sys/wait.h>

#include <filesystem>
#include <regex>

#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace fixtures;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("polycomm_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string(POLYCOMM_BIN) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out.string());
  r.err = slurp(err.string());
  return r;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const std::string gol = data("gol16.scop");

}  // namespace

TEST_CASE("analyze reproduces the golden dumps") {
  CHECK(run("analyze " + gol + " --dump deps").out == slurp(golden("gol16_deps.txt")));
  const fs::path dir = scratch() / "analysis";
  const Result r = run("analyze " + gol + " --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(slurp((dir / "deps.txt").string()) == slurp(golden("gol16_deps.txt")));
  CHECK(slurp((dir / "place.txt").string()) == slurp(golden("gol16_place_2x2.txt")));
  CHECK(slurp((dir / "chunk.txt").string()) == slurp(golden("gol16_chunk.txt")));
}

TEST_CASE("plan shows seven-element boundary chunks") {
  const Result r = run("plan " + gol + " --grid 2x2");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("plan grid=(2,2) arity=8\n", 0) == 0);
  const std::regex boundary(R"(kind=send chunk=\d+ src=\(0,0\) dst=\(1,0\) tag=\d+ size=(\d+))");
  std::size_t n = 0;
  for (auto it = std::sregex_iterator(r.out.begin(), r.out.end(), boundary); it != std::sregex_iterator(); ++it) {
    ++n;
    CHECK((*it)[1] == "7");
  }
  CHECK(n == 3);  // prologue input for iteration 0, then iterations 1 and 2
}

TEST_CASE("verify passes on every grid") {
  for (const char* grid : {"1x1", "2x2", "4x4"}) {
    const Result r = run("verify " + gol + " --grid " + grid + " --seed 42");
    CAPTURE(grid);
    CHECK(r.code == 0);
    CHECK(r.out.rfind(std::string("verify: PASS grid=") + grid, 0) == 0);
  }
  CHECK(run("verify " + gol + " --iters 1 --define N=32 --grid 4x4").code == 0);
}

TEST_CASE("simulate writes the final field contents") {
  const fs::path dir = scratch() / "sim";
  REQUIRE(run("simulate " + gol + " --seed 3 --out " + dir.string() + " --dump trace").code == 0);
  CHECK(fs::file_size(dir / "trace.txt") > 0);
  REQUIRE(run("simulate " + gol + " --seed 3 --out " + dir.string()).code == 0);
  const polycomm::Scop s = polycomm::load_scop(gol);
  const auto got = polycomm::FieldContents::parse(slurp((dir / "final.txt").string()), s);
  CHECK_FALSE(polycomm::first_divergence(polycomm::sequential_execute(s, polycomm::FieldContents::random(s, 3)), got));

  // --init takes precedence over --seed.
  const fs::path init = write("init.txt", polycomm::FieldContents::random(s, 3).text());
  REQUIRE(run("simulate " + gol + " --seed 99 --init " + init.string() + " --out " + (scratch() / "sim2").string()).code == 0);
  CHECK(slurp((scratch() / "sim2" / "final.txt").string()) == slurp((dir / "final.txt").string()));
}

TEST_CASE("hand-edited plans are caught") {
  const std::string plan = run("plan " + gol).out;
  // Point every hadLife read at the first buffer slot.
  const std::string wrong = std::regex_replace(plan, std::regex(R"((stmt=S1\.5 \S+ read=0:\d+)@\d+)"), "$1@0");
  const Result mismatch = run("verify " + gol + " --plan " + write("wrong.txt", wrong).string());
  CHECK(mismatch.code == 5);
  CHECK(mismatch.err.find("first divergence") != std::string::npos);

  std::string dropped;
  std::istringstream in(plan);
  for (std::string line; std::getline(in, line);)
    if (!(line.find("node=(1,0)") == 0 && line.find(" kind=recv ") != std::string::npos &&
          line.find("src=(0,0)") != std::string::npos))
      dropped += line + "\n";
  const Result dead = run("verify " + gol + " --plan " + write("dropped.txt", dropped).string());
  CHECK(dead.code == 4);
  CHECK(dead.err.find("DeadlockDetected") != std::string::npos);

  CHECK(run("verify " + gol + " --plan " + write("garbage.txt", "plan grid=(2,2) arity=8\nnonsense\n").string()).code == 1);
  CHECK(run("verify " + gol + " --grid 4x4 --plan " + write("plan.txt", plan).string()).code == 4);
}

TEST_CASE("exit codes by error class") {
  CHECK(run("").code == 1);
  CHECK(run("analyze").code == 1);
  CHECK(run("analyze " + (scratch() / "missing.scop").string()).code == 1);
  const Result bad = run("analyze " + write("bad.scop", "{\n  \"fields\": [,]\n}").string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 2") != std::string::npos);
  CHECK(run("analyze " + gol + " --define N").code == 1);
  CHECK(run("analyze " + gol + " --grid 3x3").code == 2);
  CHECK(run("analyze " + gol + " --dump everything").code == 2);

  std::string text = slurp(gol);
  const std::string from = "S1.2[i,x,y] -> [0, i, 0, x, 0, y, 2]";
  text.replace(text.find(from), from.size(), "S1.2[i,x,y] -> [0, i, 0, x, 0, y, 0]");
  const std::string from1 = "S1.1[i,x,y] -> [0, i, 0, x, 0, y, 1]";
  text.replace(text.find(from1), from1.size(), "S1.1[i,x,y] -> [0, i, 0, x, 0, y, 2]");
  const Result uncovered = run("analyze " + write("uncovered.scop", text).string());
  CHECK(uncovered.code == 3);
  CHECK(uncovered.err.find("UncoveredRead") != std::string::npos);
}

TEST_CASE("print and the empty SCoP") {
  const Result r = run("print " + gol);
  CHECK(r.code == 0);
  CHECK(polycomm::print_scop(polycomm::parse_scop(r.out)) + "\n" == r.out);
  const Result e = run("verify " + data("empty.scop"));
  CHECK(e.code == 0);
  CHECK(run("analyze " + data("empty.scop") + " --dump deps").out.empty());
}
