#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace quizgen {

/// Runs the command line. Results go to `out`; failures are reported on
/// `err` as one JSON object {"error_code", "message"} with a nonzero exit
/// code (2 for usage and configuration errors, 1 otherwise).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quizgen
