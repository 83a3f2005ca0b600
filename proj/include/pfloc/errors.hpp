#pragma once

#include <stdexcept>
#include <string>

namespace pfloc {

/// Input outside an operation's domain (bad geometry, out-of-roi lookups, invalid vectors).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed configuration, environment, or data file.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// All particle weights vanished during an update.
class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid command-line or API argument combination.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace pfloc
