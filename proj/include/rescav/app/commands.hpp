#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace rescav::app {

inline constexpr const char* kVersion = "0.1.0";

// Runs one command line (without the program name). Returns the process exit
// code: 0 success, 2 usage, 3 invalid config, 4 missing input, 5 data or
// parse error, 6 numerical failure, 1 anything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code_for(const std::exception& e);

}  // namespace rescav::app
