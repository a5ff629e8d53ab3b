#pragma once

#include <stdexcept>
#include <string>

namespace wattledger {

/// Base of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The caller broke a precondition: bad argument, wrong unit, misuse of an API.
class usage_error : public error {
public:
    using error::error;
};

/// The data itself is unusable: malformed rows, coverage gaps, corrupted counters.
class data_error : public error {
public:
    using error::error;
};

} // namespace wattledger
