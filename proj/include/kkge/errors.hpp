#pragma once
// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 1, DataError (and subclasses) -> 2, NumericError -> 3.

#include <stdexcept>
#include <string>

namespace kkge {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : DataError {
    ParseError(const std::string& file, long line, const std::string& msg)
        : DataError(file + ":" + std::to_string(line) + ": " + msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint / cache file failures, each distinct so callers can tell them apart.
struct FileFormatError : DataError {
    explicit FileFormatError(const std::string& msg) : DataError(msg) {}
};
struct FileVersionError : DataError {
    explicit FileVersionError(const std::string& msg) : DataError(msg) {}
};
struct FileTruncatedError : DataError {
    explicit FileTruncatedError(const std::string& msg) : DataError(msg) {}
};
struct FileChecksumError : DataError {
    explicit FileChecksumError(const std::string& msg) : DataError(msg) {}
};

}  // namespace kkge
