#pragma once

#include <stdexcept>
#include <string>

namespace rpr {

/// Invalid input, violated precondition or domain constraint.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure to read or write an external resource.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rpr
