#pragma once

#include "asymdec/errors.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace asymdec::cli {

inline constexpr std::string_view kVersion = "1.0.0";

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,     // numeric failure or an unexpected error
  kConfig = 2,      // bad flags or configuration
  kData = 3,        // malformed or mismatched data
  kAssumption = 4,  // loss quartet violates the weight positivity requirements
};

int exit_code_for(ErrorCategory category) noexcept;

// Hex SHA-256 of a file's bytes. Throws ConfigError when unreadable.
std::string sha256_file(const std::string& path);

// Runs one subcommand. args[0] is the program name. Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asymdec::cli
