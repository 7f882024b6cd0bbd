// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace t2vrefine {

// Extracts the first balanced, syntactically valid JSON object from raw LLM
// output. Tolerates code fences and leading/trailing prose; a candidate that
// fails to parse is skipped and the scan continues from the next '{'.
// Throws Error(unparseable_output) when no valid object exists.
nlohmann::json extract_first_json_object(std::string_view raw);

}  // namespace t2vrefine
