// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/json_extract.hpp"

#include "t2vrefine/errors.hpp"

namespace t2vrefine {

namespace {

// Returns one-past-the-end of the balanced object starting at `start`
// (s[start] == '{'), or npos if the braces never balance. Brace counting
// ignores string contents and escapes.
std::size_t balanced_end(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace

nlohmann::json extract_first_json_object(std::string_view raw) {
    std::size_t pos = raw.find('{');
    while (pos != std::string_view::npos) {
        std::size_t end = balanced_end(raw, pos);
        if (end == std::string_view::npos) break;  // nothing after this can balance
        auto candidate = raw.substr(pos, end - pos);
        auto parsed = nlohmann::json::parse(candidate, nullptr, false);
        if (!parsed.is_discarded()) return parsed;
        pos = raw.find('{', pos + 1);
    }
    throw Error(ErrorCode::unparseable_output, "no valid JSON object in reasoner output");
}

}  // namespace t2vrefine
