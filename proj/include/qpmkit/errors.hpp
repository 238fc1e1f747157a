#pragma once

#include <stdexcept>
#include <string>

namespace qpmkit {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (bad wavelength, malformed profile, ...).
struct config_error : error {
    using error::error;
};

// A numerical procedure failed (divergence, no bracket, degenerate matrix).
struct numeric_error : error {
    using error::error;
};

// File I/O and parse failures.
struct io_error : error {
    using error::error;
};

} // namespace qpmkit
