#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace popsim {

/// Process exit codes of the command-line tool
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_numerical_guard = 2,
  exit_verify_failed = 3,
  exit_runtime = 4,
};

/// `args` excludes the program and subcommand names
int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_verify(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches `simulate` or `verify`; `args` excludes the program name
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace popsim
