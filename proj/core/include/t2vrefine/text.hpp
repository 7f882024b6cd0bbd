// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace t2vrefine {

std::string trim(std::string_view s);

// Whitespace-delimited tokens. This is the single word counter shared by the
// prompt types, the refined-prompt truncation and the tests.
std::vector<std::string> tokenize_words(std::string_view s);

std::size_t count_words(std::string_view s);

// First `limit` tokens joined by single spaces.
std::string truncate_words(std::string_view s, std::size_t limit);

// "0.26" style fixed two-decimal formatting used by reports and prompts.
std::string format_score(double value);

std::string iso8601_utc_now();

}  // namespace t2vrefine
