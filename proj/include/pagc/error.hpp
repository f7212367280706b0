#pragma once

#include <stdexcept>
#include <string>

namespace pagc {

// Bad files, bad arguments, malformed configs. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The computation itself cannot proceed (degenerate data, empty feature
// sets, non-convergence treated as fatal). Maps to CLI exit code 1.
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pagc
