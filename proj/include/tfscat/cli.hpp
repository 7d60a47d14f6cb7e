#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tfs {

/// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
/// Failures also print one JSON line {"error", "message", "exit_code"} on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace tfs
