// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/csv.hpp"

namespace t2vrefine {

std::string csv_escape_field(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_encode_row(std::span<const std::string> fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_escape_field(fields[i]);
    }
    out += '\n';
    return out;
}

std::optional<std::vector<std::string>> CsvReader::next_record() {
    if (!in_.good()) return std::nullopt;

    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;

    int ci;
    while ((ci = in_.get()) != std::char_traits<char>::eof()) {
        char c = static_cast<char>(ci);
        saw_any = true;
        if (in_quotes) {
            if (c == '"') {
                int peek = in_.peek();
                if (peek == '"') {
                    in_.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                break;  // swallow; '\n' ends the record
            case '\n':
                fields.push_back(std::move(field));
                return fields;
            default:
                field += c;
        }
    }

    if (!saw_any) return std::nullopt;
    if (in_quotes) {
        // EOF inside a quoted field: the writer was interrupted mid-record.
        torn_ = true;
        return std::nullopt;
    }
    fields.push_back(std::move(field));
    return fields;  // final record without trailing newline is valid CSV
}

}  // namespace t2vrefine
