#include "bilinctl/errors.hpp"

namespace bilinctl {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Structural: return "structural";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Validation: return "validation";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind)
{
}

}  // namespace bilinctl
