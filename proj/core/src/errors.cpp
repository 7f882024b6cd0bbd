// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/errors.hpp"

namespace t2vrefine {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_value: return "invalid_value";
        case ErrorCode::missing_placeholder: return "missing_placeholder";
        case ErrorCode::empty_caption: return "empty_caption";
        case ErrorCode::unparseable_output: return "unparseable_output";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::transport_error: return "transport_error";
        case ErrorCode::auth_error: return "auth_error";
        case ErrorCode::timeout_error: return "timeout_error";
        case ErrorCode::generation_error: return "generation_error";
        case ErrorCode::caption_error: return "caption_error";
        case ErrorCode::missing_video: return "missing_video";
        case ErrorCode::evaluation_error: return "evaluation_error";
        case ErrorCode::storage_error: return "storage_error";
        case ErrorCode::corrupt_ledger: return "corrupt_ledger";
        case ErrorCode::unknown_session: return "unknown_session";
        case ErrorCode::schema_error: return "schema_error";
        case ErrorCode::empty_cohort: return "empty_cohort";
        case ErrorCode::config_error: return "config_error";
        case ErrorCode::backend_failure: return "backend_failure";
    }
    return "unknown";
}

}  // namespace t2vrefine
