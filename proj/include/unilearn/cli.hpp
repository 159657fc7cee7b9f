#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace unilearn {

/// Runs one CLI invocation; args excludes the program name.
/// Returns 0 on success, 2 on invalid arguments and 1 when a module aborts
/// or a verification fails.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace unilearn
