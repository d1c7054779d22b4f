#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace properscore::cli {

/// Runs one command line (without the program name). Reports go to `out`
/// as a single JSON object; diagnostics go to `err`. Returns 0 on success,
/// 1 on validation errors (bad flags, files, records), 2 on numeric failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace properscore::cli
