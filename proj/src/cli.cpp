#include "adme/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "adme/api.hpp"
#include "adme/compiler.hpp"
#include "adme/madme.hpp"
#include "adme/runner.hpp"
#include "adme/solver.hpp"

namespace adme::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
}

int cmd_solve(const std::string& goalPath, int maxSolutions, int cap,
              const std::string& outDir, std::ostream& out, std::ostream& err) {
  deladas::Goal goal;
  compiler::CspProblem problem;
  try {
    goal = deladas::parse_goal(read_file(goalPath));
    problem = compiler::compile(goal, cap);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  solver::SolveOptions options;
  options.maxSolutions = maxSolutions;
  solver::SolveOutcome outcome = solver::solve(problem, goal, options);
  out << solver::status_text(outcome.status) << "\n";
  if (outcome.status != solver::SolveStatus::Sat) return 1;
  std::filesystem::create_directories(outDir);
  int index = 1;
  for (const auto& config : outcome.solutions) {
    std::string path = outDir + "/solution-" + std::to_string(index) + ".xml";
    write_file(path, model::to_ddd(config));
    out << path << "\n";
    ++index;
  }
  return 0;
}

int cmd_validate(const std::string& goalPath, const std::string& dddPath,
                 std::ostream& out, std::ostream& err) {
  try {
    deladas::Goal goal = deladas::parse_goal(read_file(goalPath));
    model::Configuration config = model::from_ddd(read_file(dddPath));
    std::vector<model::Violation> violations = model::validate(config, goal);
    for (const auto& v : violations) out << model::format_violation(v) << "\n";
    return violations.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
}

int cmd_run(const std::string& goalPath, const std::string& scenarioPath,
            const runner::RunOptions& options, const std::string& logPath,
            const std::string& outDddPath, std::ostream& out, std::ostream& err) {
  runner::RunReport report;
  try {
    report = runner::run_scenario(read_file(goalPath), read_file(scenarioPath), options);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  std::string logText;
  for (const auto& line : report.eventLog) logText += line + "\n";
  try {
    if (!logPath.empty())
      write_file(logPath, logText);
    else
      out << logText;
    if (!outDddPath.empty() && !report.finalDdd.empty())
      write_file(outDddPath, report.finalDdd);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  bool ok = report.exitStatus == runner::RunReport::Status::Ok;
  out << "status " << (ok ? "OK" : "DEGRADED") << "\n";
  out << "solver-calls " << report.solverCalls << "\n";
  for (const auto& v : report.finalViolations)
    out << model::format_violation(v) << "\n";
  if (!report.schemaError.empty()) out << report.schemaError << "\n";
  return ok ? 0 : 3;
}

int cmd_serve(const std::string& goalPath, int port, int cap, std::ostream& out,
              std::ostream& err) {
  try {
    deladas::Goal goal = deladas::parse_goal(read_file(goalPath));
    auto fabric = std::make_unique<fabric::Fabric>(goal.hosts, fabric::FabricParams{},
                                                   /*seed=*/0);
    madme::Manager manager(std::move(goal), *fabric, cap);
    api::ApiServer server(manager);
    out << "serving on port " << port << "\n";
    if (!server.serve_forever(port)) {
      err << "cannot bind port " << port << "\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"constraint-based deployment engine with autonomic self-healing"};
  app.require_subcommand(1);

  std::string goalPath, dddPath, scenarioPath, outDir = ".", logPath, outDddPath,
              initialPath;
  int maxSolutions = 1, cap = 1, port = 8080;
  unsigned seed = 0;
  long until = -1;

  CLI::App* solve = app.add_subcommand("solve", "solve a goal into DDD files");
  solve->add_option("goal", goalPath, "goal file (.dld)")->required();
  solve->add_option("--max-solutions", maxSolutions, "solutions to emit (0 = all)");
  solve->add_option("--cap", cap, "per-host instance cap");
  solve->add_option("--out", outDir, "output directory");

  CLI::App* validate = app.add_subcommand("validate", "validate a DDD against a goal");
  validate->add_option("goal", goalPath, "goal file (.dld)")->required();
  validate->add_option("ddd", dddPath, "configuration file (.xml)")->required();

  CLI::App* run = app.add_subcommand("run", "replay a failure scenario");
  run->add_option("goal", goalPath, "goal file (.dld)")->required();
  run->add_option("scenario", scenarioPath, "scenario file")->required();
  run->add_option("--seed", seed, "simulation seed");
  run->add_option("--until", until, "simulated end time in ms");
  run->add_option("--cap", cap, "per-host instance cap");
  run->add_option("--log", logPath, "write the event log here");
  run->add_option("--out-ddd", outDddPath, "write the final DDD here");
  run->add_option("--initial", initialPath, "baseline DDD pinned for the initial solve");

  CLI::App* serve = app.add_subcommand("serve", "serve the HTTP interface");
  serve->add_option("goal", goalPath, "goal file (.dld)")->required();
  serve->add_option("--port", port, "listen port");
  serve->add_option("--cap", cap, "per-host instance cap");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 2;
  }

  if (solve->parsed()) return cmd_solve(goalPath, maxSolutions, cap, outDir, out, err);
  if (validate->parsed()) return cmd_validate(goalPath, dddPath, out, err);
  if (run->parsed()) {
    runner::RunOptions options;
    options.seed = seed;
    options.perHostCap = cap;
    if (until >= 0) options.untilMs = until;
    if (!initialPath.empty()) {
      try {
        options.initialDdd = read_file(initialPath);
      } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 2;
      }
    }
    return cmd_run(goalPath, scenarioPath, options, logPath, outDddPath, out, err);
  }
  if (serve->parsed()) return cmd_serve(goalPath, port, cap, out, err);
  return 2;
}

}  // namespace adme::cli
