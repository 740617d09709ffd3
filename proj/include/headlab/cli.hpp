#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace headlab {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kReportFormatVersion = 1;

/// Runs the command line tool on argv-style arguments (without the program
/// name). Returns the process exit code: 0 on success, 1 on a runtime or
/// input error, 2 on a usage error. Errors are reported on `err` as one
/// line: `error[<kind>]: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace headlab
