#pragma once

#include <stdexcept>
#include <string>

namespace bpo {

enum class ErrorCode {
    Syntax,      // malformed document / CSV / checkpoint
    Validation,  // semantically invalid model or inconsistent input data
    Config,      // bad scenario / training / harness configuration
    Io,          // file or network failure
    Runtime,     // everything else (shape mismatch, empty input, ...)
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace bpo
