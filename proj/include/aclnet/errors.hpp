#pragma once

#include <stdexcept>
#include <string>

namespace aclnet {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes disagree with what an operation requires.
struct shape_error : error {
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// A NetworkConfig (or other config object) violates one of its invariants.
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Bad input data: WAV decode failures, index CSV problems, file I/O.
struct data_error : error {
    explicit data_error(const std::string& msg) : error(msg) {}
};

// An operation was called in the wrong order (e.g. backward without forward).
struct state_error : error {
    explicit state_error(const std::string& msg) : error(msg) {}
};

// Training produced non-finite values.
struct numeric_error : error {
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

}  // namespace aclnet
