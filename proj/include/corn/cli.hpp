#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace corn {

inline constexpr const char* kVersion = "0.1.0";

// Runs one `corn` invocation; args[0] is the program name. Machine output
// goes to out, diagnostics to err. Returns 0 on success, 1 on a domain
// error and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corn
