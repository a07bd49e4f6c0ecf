// polycomm: analyze a SCoP, generate a communication plan for a node grid,
// simulate it and compare against sequential execution.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "polycomm/error.hpp"
#include "polycomm/simrt.hpp"

namespace fs = std::filesystem;
using namespace polycomm;

namespace {

constexpr int kVerifyMismatch = 5;

struct Config {
  std::string input;
  std::string grid;
  std::optional<std::int64_t> iters;
  std::vector<std::string> defines;
  std::string out;
  std::vector<std::string> dump;
  std::uint64_t seed = 42;
  std::string init;
  std::string plan;
  bool isolated = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Scop load(const Config& c) {
  Constants overrides;
  for (const auto& d : c.defines) {
    const auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::ParseError, "--define expects K=V, got '" + d + "'");
    try {
      std::size_t used = 0;
      overrides[d.substr(0, eq)] = std::stoll(d.substr(eq + 1), &used);
      if (used != d.size() - eq - 1) throw std::invalid_argument(d);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::ParseError, "--define value must be an integer: '" + d + "'");
    }
  }
  if (c.iters) {
    if (*c.iters < 0) throw Error(ErrorKind::ValidationError, "--iters must be >= 0");
    overrides["ITERS"] = *c.iters;
  }
  return load_scop(c.input, overrides);
}

Grid grid_of(const Config& c, const Scop& s) {
  if (!c.grid.empty()) return parse_grid(c.grid);
  if (s.grid.empty()) throw Error(ErrorKind::ValidationError, "no grid in the SCoP; pass --grid");
  return Grid{s.grid};
}

bool wants(const Config& c, const std::string& what, bool by_default) {
  if (c.dump.empty()) return by_default;
  return std::find(c.dump.begin(), c.dump.end(), what) != c.dump.end();
}

void emit(const Config& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out);
  std::ofstream f(fs::path(c.out) / name, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorKind::ValidationError, "cannot write " + (fs::path(c.out) / name).string());
}

FieldContents initial(const Config& c, const Scop& s) {
  if (!c.init.empty()) return FieldContents::parse(read_file(c.init), s);
  return FieldContents::random(s, c.seed);
}

CommPlan plan_for(const Config& c, const Pipeline& p) {
  if (c.plan.empty()) return p.plan;
  return parse_plan(read_file(c.plan), p.deps.scop);
}

int cmd_analyze(const Config& c) {
  const Scop s = load(c);
  const Scop iso = isolate_accesses(s);
  const DepGraph d = compute_flow(iso);
  if (wants(c, "deps", true)) emit(c, "deps.txt", dump_deps(d));
  if (wants(c, "place", true)) {
    const FieldPlacement fp = block_distribute(d.scop.fields, grid_of(c, s));
    emit(c, "place.txt", dump_placements(d, fp, place_statements(d, fp)));
  }
  if (wants(c, "chunk", true)) emit(c, "chunk.txt", dump_chunkings(d, compute_chunkings(d)));
  return 0;
}

int cmd_plan(const Config& c) {
  const Scop s = load(c);
  const Pipeline p = run_pipeline(isolate_accesses(s), grid_of(c, s));
  emit(c, "plan.txt", plan_text(p.plan, p.deps.scop));
  return 0;
}

int cmd_simulate(const Config& c, bool verify) {
  const Scop s = load(c);
  const Grid grid = grid_of(c, s);
  const Pipeline p = run_pipeline(isolate_accesses(s), grid);
  const CommPlan plan = plan_for(c, p);
  const FieldContents init = initial(c, s);
  Simulator sim(p.deps.scop, plan, grid, init);
  sim.run();
  const FieldContents got = sim.contents();
  if (wants(c, "trace", false)) emit(c, "trace.txt", sim.trace().text(grid));
  if (wants(c, "plan", false)) emit(c, "plan.txt", plan_text(plan, p.deps.scop));
  if (!verify) {
    emit(c, "final.txt", got.text());
    return 0;
  }
  if (auto div = first_divergence(sequential_execute(s, init), got)) {
    std::cerr << "verify: FAIL: first divergence at " << div->describe() << "\n";
    return kVerifyMismatch;
  }
  const auto& entries = sim.trace().entries;
  const auto sends = std::count_if(entries.begin(), entries.end(), [](const TraceEntry& e) { return e.kind == EventKind::Send; });
  std::cout << "verify: PASS grid=" << grid_text(grid) << " steps=" << sim.steps() << " messages=" << sends << "\n";
  return 0;
}

int cmd_print(const Config& c) {
  const Scop s = load(c);
  std::cout << print_scop(c.isolated ? isolate_accesses(s) : s) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication planner and SPMD simulator for static control parts"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("input", c.input, "SCoP file (JSON)")->required();
    sub->add_option("--grid", c.grid, "Node grid, e.g. 2x2 (default: the SCoP's grid)");
    sub->add_option("--iters", c.iters, "Override the ITERS constant");
    sub->add_option("--define", c.defines, "Override a constant, K=V (repeatable)");
    sub->add_option("--out", c.out, "Write artifacts into this directory instead of stdout");
    sub->add_option("--dump", c.dump, "Artifacts: deps,place,chunk,plan,trace")->delimiter(',');
  };
  auto run_opts = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "SplitMix64 seed for the initial field contents");
    sub->add_option("--init", c.init, "Initial field contents file (overrides --seed)");
    sub->add_option("--plan", c.plan, "Use this plan file instead of generating one");
  };

  auto* analyze = app.add_subcommand("analyze", "Dump flows, placements and chunking functions");
  common(analyze);
  auto* plan = app.add_subcommand("plan", "Generate the communication plan");
  common(plan);
  auto* simulate = app.add_subcommand("simulate", "Run the plan on the simulated grid");
  common(simulate);
  run_opts(simulate);
  auto* verify = app.add_subcommand("verify", "Compare simulation against sequential execution");
  common(verify);
  run_opts(verify);
  auto* print = app.add_subcommand("print", "Print the normalized SCoP");
  print->add_option("input", c.input, "SCoP file (JSON)")->required();
  print->add_option("--define", c.defines, "Override a constant, K=V (repeatable)");
  print->add_flag("--isolated", c.isolated, "Print after access isolation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every usage error is a parse error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    for (const auto& d : c.dump) {
      static const std::set<std::string> known{"deps", "place", "chunk", "plan", "trace"};
      if (!known.count(d)) throw Error(ErrorKind::ValidationError, "unknown --dump item '" + d + "'");
    }
    if (*analyze) return cmd_analyze(c);
    if (*plan) return cmd_plan(c);
    if (*simulate) return cmd_simulate(c, false);
    if (*verify) return cmd_simulate(c, true);
    if (*print) return cmd_print(c);
  } catch (const Error& e) {
    std::cerr << "polycomm: " << e.what() << "\n";
    return e.exit_code();
  }
  return 0;
}
