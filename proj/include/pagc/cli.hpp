#pragma once

#include <string>
#include <vector>

namespace pagc {

// Full command-line entry point. Exit codes: 0 success, 1 analysis failure,
// 2 usage or input error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

} // namespace pagc
