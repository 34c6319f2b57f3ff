#pragma once

#include <ostream>

namespace mch::tools {

/// Small invariant checks; prints one line per check and returns true when all pass.
bool run_selftest(std::ostream& os);

}  // namespace mch::tools
