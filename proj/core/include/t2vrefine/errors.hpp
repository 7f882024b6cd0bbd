// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace t2vrefine {

enum class ErrorCode {
    invalid_value,        // domain invariant violated at construction
    missing_placeholder,  // required template placeholder absent or unbound
    empty_caption,
    unparseable_output,   // no valid JSON object found in reasoner output
    schema_mismatch,      // JSON valid but required keys missing/ill-typed
    transport_error,
    auth_error,
    timeout_error,
    generation_error,
    caption_error,
    missing_video,
    evaluation_error,
    storage_error,
    corrupt_ledger,
    unknown_session,
    schema_error,         // dataset file violates the documented schema
    empty_cohort,
    config_error,
    backend_failure,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace t2vrefine
