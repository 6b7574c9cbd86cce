#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptss {

/// Runs one ptss command (check, derive, bisim, mc, distinguish, probe).
/// Returns the process exit code: 0 success / positive verdict, 1 negative
/// analysis result, 2 usage or model errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace ptss
