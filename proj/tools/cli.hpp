#pragma once

#include <iosfwd>

namespace wdro::cli {

/// Runs the `wdro` command line. JSON reports go to `out`, diagnostics and
/// usage text to `err`. Returns 0, 1 (computation error) or 2 (usage error).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wdro::cli
