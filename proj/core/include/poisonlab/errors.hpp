#pragma once

#include <stdexcept>
#include <string>

namespace poisonlab {

/// Base class for all library errors. Commands map subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Bad user-supplied configuration (sizes, rates, unknown keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Data handed to an operation violates its preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

/// On-disk artifact is malformed.
class FormatError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Poison budget cannot be realized against the available pool.
class PlanningError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class DefenseError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures (unwritable directory, missing file).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace poisonlab
