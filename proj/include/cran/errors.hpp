#pragma once

#include <stdexcept>
#include <string>

namespace cran {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class SizeLimit : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DegenerateChannel : public Error {
public:
    using Error::Error;
};

// Carries how far the request fell short (bits), e.g. C_sum below C*.
class Infeasible : public Error {
public:
    Infeasible(const std::string& what, double shortfall)
        : Error(what), shortfall_(shortfall) {}
    double shortfall() const { return shortfall_; }

private:
    double shortfall_;
};

}  // namespace cran
