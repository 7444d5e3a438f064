#pragma once

#include <stdexcept>
#include <string>

namespace mpesr {

// Three failure families; the CLI maps each onto its own exit status.

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mpesr
