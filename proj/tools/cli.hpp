#pragma once

#include <string>
#include <vector>

namespace geolift::cli {

// Runs one geolift subcommand. args excludes the program name.
// Returns 0 on success, 1 on invalid input or usage, 2 when the computation fails.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace geolift::cli
