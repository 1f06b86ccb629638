#pragma once

#include <stdexcept>
#include <string>

namespace rbs {

enum class ErrorCode {
    domain,            // value outside the physical/valid range
    index,             // bad cell/switch index
    mapping,           // configuration descriptor cannot be wired
    degenerate_config, // elimination matrix numerically singular
    power_infeasible,  // requested power exceeds deliverable maximum
    io,                // file/format problem
    usage,             // bad invocation
    refusal,           // request exceeds a hard operational limit
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::domain: return "domain";
        case ErrorCode::index: return "index";
        case ErrorCode::mapping: return "mapping";
        case ErrorCode::degenerate_config: return "degenerate_config";
        case ErrorCode::power_infeasible: return "power_infeasible";
        case ErrorCode::io: return "io";
        case ErrorCode::usage: return "usage";
        case ErrorCode::refusal: return "refusal";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string key = {})
        : std::runtime_error(std::move(message)), code_(code), key_(std::move(key)) {}

    ErrorCode code() const noexcept { return code_; }

    // Machine-readable payload: the offending matrix name, file path,
    // value, or step index depending on the error kind.
    const std::string& key() const noexcept { return key_; }

private:
    ErrorCode code_;
    std::string key_;
};

} // namespace rbs
