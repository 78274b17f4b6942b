#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace selectest {

/// Parses "start:stop:step" or a comma separated list.
std::vector<double> parse_tau_grid(std::string_view spec);

/// Entry point of the `selectest` tool. args excludes the program name.
/// Returns 0 on success, 1 on data or configuration errors and 2 when the
/// data cannot support the requested test.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace selectest
