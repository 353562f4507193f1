#pragma once

#include <iosfwd>

namespace rotorvib::cli {

/// Runs one command line. Results go to `out`, progress and the single-line
/// error record to `err`. Returns 0 on success, 2 for configuration errors,
/// 3 for data errors and 4 for numeric failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rotorvib::cli
