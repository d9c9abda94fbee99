#pragma once

#include <stdexcept>
#include <string>

namespace medsel {

/// Raised for invalid input and for pipeline failures the caller can report.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace medsel
