#pragma once

#include <stdexcept>
#include <string>

namespace unfold {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inputs with inconsistent shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed configuration or out-of-domain parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Quadrature or optimization did not reach the requested accuracy.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateBinError : public Error {
public:
    DegenerateBinError(std::size_t bin, const std::string& what)
        : Error("degenerate bin " + std::to_string(bin) + ": " + what), bin_(bin) {}
    std::size_t bin() const { return bin_; }

private:
    std::size_t bin_;
};

class CovarianceError : public Error {
public:
    CovarianceError(std::size_t index, const std::string& what)
        : Error("covariance entry " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

// Least-squares quantities need a full-column-rank operator.
class RankError : public Error {
public:
    using Error::Error;
};

// No decision rule satisfies the coverage constraints.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace unfold
