#pragma once

#include <stdexcept>
#include <string>

namespace bilinctl {

enum class ErrorKind {
    Structural,   // dimension or shape mismatch
    Resolution,   // quadrature too coarse for the requested basis
    StepSize,     // implicit stage failed to contract even after refinement
    Unsupported,  // feature not available for this problem family
    Validation,   // invalid user input
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace bilinctl
