#pragma once

// The qtunnel command-line front end, callable in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace qtunnel {

/// args excludes the program name. Returns 0 on success, 1 on a numerical
/// failure, 2 on a usage or configuration error; failures also write a
/// single `error: CODE: message` line to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qtunnel
