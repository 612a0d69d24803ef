#pragma once

#include <stdexcept>
#include <string>

namespace skeptic {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values or ranges.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mismatched dimensions between inputs.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Label or element index outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Arguments outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite values produced or consumed during training.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A transition matrix that cannot be used for loss correction.
class CorrectionError : public Error {
public:
    using Error::Error;
};

/// Malformed files (IDX, CSV, sidecar, matrix files).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Audit failures on noisy datasets (missing true labels, invalid flips).
class AuditError : public Error {
public:
    using Error::Error;
};

/// The distribution oracle met a configuration it cannot evaluate.
class OracleError : public Error {
public:
    using Error::Error;
};

}  // namespace skeptic
