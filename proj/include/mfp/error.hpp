#pragma once

#include <stdexcept>
#include <string>

namespace mfp {

// Root of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit-code contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// A non-finite value appeared in an operation's output.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class NoPairsError : public Error {
public:
    using Error::Error;
};

// Weight archive problems (exit code 3 in the CLI).
class WeightError : public Error {
public:
    using Error::Error;
};

class TensorAbsentError : public WeightError {
public:
    explicit TensorAbsentError(std::string name)
        : WeightError("weight tensor absent: " + name), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class TensorShapeError : public WeightError {
public:
    TensorShapeError(std::string name, const std::string& detail)
        : WeightError("weight tensor '" + name + "' has wrong shape: " + detail),
          name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

} // namespace mfp
