#pragma once

#include <iosfwd>

namespace soc {

// Runs fast built-in self-checks (gradient probes, assignment and metric
// oracles, determinism) and prints one line per check. Returns true when
// every check passes.
bool run_verify(std::ostream& os);

}  // namespace soc
