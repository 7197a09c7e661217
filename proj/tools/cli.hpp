#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace postcheck::cli {

// Parses and runs one command line (args excludes the program name).
// Returns 0 on success, 2 on usage errors, 1 on validation/module errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace postcheck::cli
