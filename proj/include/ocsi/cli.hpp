#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocsi::cli {

// Exit codes: 0 success, 1 module error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ocsi::cli
