// errors.hpp: exception hierarchy shared by all modules.
//
// The CLI maps each family onto an exit code (see commands.hpp):
//   2  ConfigError, FormatError, StructuralError, DomainError
//   3  InstabilityError, NumericalError, ConvergenceError, RangeError
//   4  DataError, DegenerateProfileError, filesystem failures

#pragma once

#include <stdexcept>
#include <string>

namespace polariton {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter lies outside its mathematical domain (negative field, η > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Incompatible dimensions between cooperating objects.
class StructuralError : public Error {
public:
    using Error::Error;
};

// The quadratic form is not positive definite: some normal mode has an
// imaginary frequency.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, double re_thz, double im_thz)
        : Error(what), re_thz_(re_thz), im_thz_(im_thz) {}
    double real_part_thz() const noexcept { return re_thz_; }
    double imag_part_thz() const noexcept { return im_thz_; }

private:
    double re_thz_;
    double im_thz_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Zero self-overlap of a field profile on the integration domain.
class DegenerateProfileError : public Error {
public:
    using Error::Error;
};

// A sweep does not cover the range an analysis needs.
class RangeError : public Error {
public:
    using Error::Error;
};

// Input data are missing, empty or do not constrain the requested fit.
class DataError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Malformed input file. `where` is "path:line" when a line is known.
class FormatError : public Error {
public:
    FormatError(const std::string& where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what) {}
};

// Schema violation in a run configuration; always line-anchored when possible.
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what) {}
};

} // namespace polariton
