#pragma once

// Command-line driver. Commands:
//   solve <goal.dld> [--max-solutions N] [--cap K] [--out DIR]
//   validate <goal.dld> <config.xml>
//   run <goal.dld> <scenario.txt> [--seed S] [--until T] [--cap K]
//       [--log FILE] [--out-ddd FILE] [--initial DDD.xml]
//   serve <goal.dld> [--port P] [--cap K]
//
// Exit codes: solve 0=SAT 1=UNSAT/LIMIT 2=error; validate 0=clean
// 1=violations 2=error; run 0=OK 3=DEGRADED 2=error; serve 2=bind failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace adme::cli {

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace adme::cli
