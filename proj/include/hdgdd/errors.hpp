#ifndef HDGDD_ERRORS_HPP
#define HDGDD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hdgdd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the offending 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Input that parses but violates a structural requirement (conformity, ranges, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

/// Direct factorisation failed (singular or numerically singular matrix).
class FactorizationError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace hdgdd

#endif // HDGDD_ERRORS_HPP
