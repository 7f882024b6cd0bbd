// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace t2vrefine {

// RFC-4180: fields containing comma, quote, CR or LF are quoted and inner
// quotes doubled.
std::string csv_escape_field(std::string_view field);

// One encoded record, terminated with '\n'.
std::string csv_encode_row(std::span<const std::string> fields);

// Streaming RFC-4180 reader. A record may span multiple physical lines when
// quoted fields contain newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Next record, or nullopt at end of input.
    std::optional<std::vector<std::string>> next_record();

    // True when input ended inside a quoted field (a torn final record);
    // that record is not returned by next_record().
    bool last_record_torn() const { return torn_; }

private:
    std::istream& in_;
    bool torn_ = false;
};

}  // namespace t2vrefine
