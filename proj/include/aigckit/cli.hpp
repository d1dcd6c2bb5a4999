#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace aigckit::cli {

/// Exit codes: 0 success, 1 operational failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace aigckit::cli
