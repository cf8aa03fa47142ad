#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace demix {

/// Experiment CLI. Returns 0 on success, 1 on spec or usage errors, 2 on
/// internal errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace demix
