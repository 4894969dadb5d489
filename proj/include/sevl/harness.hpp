/// @file harness.hpp
/// @brief Experiment runner behind the `sevl` command line tool.
#pragma once

#include <string>
#include <vector>

namespace sevl::harness {

/// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad configuration or usage.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Names of the registered subcommands.
std::vector<std::string> subcommands();
/// Default configuration (JSON text) for a subcommand.
std::string default_config(const std::string& subcommand);

}  // namespace sevl::harness
