#pragma once

#include <ostream>

namespace mcd {

/// Entry point of the `mcd` tool. CSV goes to --out or, without it, to `out`;
/// diagnostics go to `err`. Returns 0 on success.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mcd
