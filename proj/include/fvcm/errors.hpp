#pragma once

#include <stdexcept>
#include <string>

namespace fvcm {

// Two error families, mirrored by the CLI exit codes: validation errors
// (bad inputs, malformed files, incompatible configuration -> exit 1) and
// numeric errors (estimation failed on valid inputs -> exit 2).

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidBandwidthError : public ValidationError {
public:
    explicit InvalidBandwidthError(const std::string& msg) : ValidationError(msg) {}
};

class GridMismatchError : public ValidationError {
public:
    explicit GridMismatchError(const std::string& msg) : ValidationError(msg) {}
};

class DimensionError : public ValidationError {
public:
    explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

class InvalidMatrixError : public ValidationError {
public:
    explicit InvalidMatrixError(const std::string& msg) : ValidationError(msg) {}
};

class InvalidWeightsError : public ValidationError {
public:
    explicit InvalidWeightsError(const std::string& msg) : ValidationError(msg) {}
};

class UnsupportedModifierError : public ValidationError {
public:
    explicit UnsupportedModifierError(const std::string& msg) : ValidationError(msg) {}
};

class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

class UnsupportedVersionError : public ValidationError {
public:
    explicit UnsupportedVersionError(const std::string& msg) : ValidationError(msg) {}
};

// A query landed where the kernel weights carry no effective mass.
class DegenerateNeighborhoodError : public NumericError {
public:
    explicit DegenerateNeighborhoodError(const std::string& msg) : NumericError(msg) {}
};

class SingularDesignError : public NumericError {
public:
    explicit SingularDesignError(const std::string& msg) : NumericError(msg) {}
};

class NoFeasibleBandwidthError : public NumericError {
public:
    explicit NoFeasibleBandwidthError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace fvcm
