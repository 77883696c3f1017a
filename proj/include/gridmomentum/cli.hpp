#pragma once

#include <string>
#include <vector>

namespace gridmomentum {

/// Runs the command-line front end. Exit codes: 0 success, 1 invalid input
/// or arguments, 2 numerical failure.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace gridmomentum
