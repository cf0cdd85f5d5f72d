#pragma once
// Error taxonomy shared by the library and the CLI. Every thrown error
// carries a machine-readable code string and a kind that maps onto the
// CLI exit-code table.

#include <stdexcept>
#include <string>

namespace rcause {

enum class ErrorKind {
    Parse,        // malformed input file or request
    Validation,   // well-formed but semantically inconsistent input
    CapExceeded,  // an enumeration or expansion exceeded its configured cap
    Totality,     // an update kernel had no row for an encountered input
    Internal,     // invariant breach inside the library
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error parse_error(const std::string& msg) {
    return Error(ErrorKind::Parse, "PARSE_ERROR", msg);
}

inline Error validation_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Validation, code, msg);
}

inline Error cap_exceeded(const std::string& msg) {
    return Error(ErrorKind::CapExceeded, "CAP_EXCEEDED", msg);
}

inline Error totality_error(const std::string& msg) {
    return Error(ErrorKind::Totality, "TOTALITY_ERROR", msg);
}

inline Error internal_error(const std::string& msg) {
    return Error(ErrorKind::Internal, "INTERNAL_ERROR", msg);
}

// Exit-code table used by the CLI; kept here so tests can assert the mapping.
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return 1;
        case ErrorKind::Validation: return 2;
        case ErrorKind::CapExceeded: return 3;
        case ErrorKind::Totality: return 4;
        case ErrorKind::Internal: return 5;
    }
    return 5;
}

}  // namespace rcause
