#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace dsbayes::cli {

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 on success, 2 config, 3 data, 4 numeric, 5 network errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-task seed derived from the root seed (splitmix64 of root and index).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

}  // namespace dsbayes::cli
