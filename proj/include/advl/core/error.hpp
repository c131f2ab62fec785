#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace advl {

// Base for every diagnostic the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor or layer shapes that do not chain.
class ShapeError : public Error {
public:
    using Error::Error;
};

// API misuse, e.g. backward without a recorded forward pass.
class UsageError : public Error {
public:
    using Error::Error;
};

// Bad configuration values or keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed file contents. The message carries the byte offset.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

// File system failures; the message names the path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace advl
