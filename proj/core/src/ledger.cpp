// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "t2vrefine/csv.hpp"
#include "t2vrefine/errors.hpp"
#include "t2vrefine/text.hpp"

namespace t2vrefine {

namespace {

[[noreturn]] void storage_fail(const std::string& what) {
    throw Error(ErrorCode::storage_error, fmt::format("{}: {}", what, std::strerror(errno)));
}

}  // namespace

FileLedgerSink::FileLedgerSink(const std::filesystem::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_WRONLY, 0644);
    if (fd_ < 0) storage_fail("open " + path.string());
}

FileLedgerSink::~FileLedgerSink() {
    if (fd_ >= 0) ::close(fd_);
}

std::uint64_t FileLedgerSink::size() {
    off_t end = ::lseek(fd_, 0, SEEK_END);
    if (end < 0) storage_fail("lseek " + path_.string());
    return static_cast<std::uint64_t>(end);
}

void FileLedgerSink::append(std::string_view bytes) {
    if (::lseek(fd_, 0, SEEK_END) < 0) storage_fail("lseek " + path_.string());
    std::size_t written = 0;
    while (written < bytes.size()) {
        ssize_t n = ::write(fd_, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            storage_fail("write " + path_.string());
        }
        written += static_cast<std::size_t>(n);
    }
}

void FileLedgerSink::sync() {
    if (::fsync(fd_) < 0) storage_fail("fsync " + path_.string());
}

void FileLedgerSink::truncate_to(std::uint64_t size) {
    if (::ftruncate(fd_, static_cast<off_t>(size)) < 0) {
        storage_fail("ftruncate " + path_.string());
    }
}

const char* SessionLedger::header() {
    return "session_id,round,step,timestamp,payload";
}

SessionLedger::SessionLedger(std::unique_ptr<LedgerSink> sink) : sink_(std::move(sink)) {
    if (sink_->size() == 0) {
        sink_->append(std::string(header()) + "\n");
        sink_->sync();
    }
}

void SessionLedger::append(const LedgerRow& row) {
    const std::string fields[] = {row.session_id, std::to_string(row.round),
                                  to_string(row.step), row.timestamp, row.payload.dump()};
    std::string record = csv_encode_row(fields);

    std::uint64_t before = sink_->size();
    try {
        sink_->append(record);
        sink_->sync();
    } catch (...) {
        // Roll back to the previous record boundary so no partial row is
        // visible after reopen.
        try {
            sink_->truncate_to(before);
            sink_->sync();
        } catch (...) {
        }
        throw;
    }
}

namespace ledger_payload {

namespace {

void put_timing(nlohmann::json& j, const RoundRecord& record, const char* step_name) {
    auto it = record.timing_ms.find(step_name);
    if (it != record.timing_ms.end()) j["timing_ms"] = it->second;
}

}  // namespace

nlohmann::json gen_video(const RoundRecord& record) {
    nlohmann::json j{{"video", record.video.value()}, {"reused", record.index > 1}};
    put_timing(j, record, "gen_video");
    return j;
}

nlohmann::json caption(const RoundRecord& record) {
    nlohmann::json j{{"caption", record.caption.value()}};
    put_timing(j, record, "caption");
    return j;
}

nlohmann::json step1(const RoundRecord& record) {
    nlohmann::json j{{"rule_analysis", record.rule_analysis.value()}};
    put_timing(j, record, "step1");
    return j;
}

nlohmann::json step2(const RoundRecord& record) {
    nlohmann::json j{{"mismatch", record.mismatch.value()}};
    put_timing(j, record, "step2");
    return j;
}

nlohmann::json evaluate(const RoundRecord& record) {
    nlohmann::json j{{"scores", record.scores.value()}};
    put_timing(j, record, "evaluate");
    return j;
}

nlohmann::json step3(const RoundRecord& record) {
    nlohmann::json j{{"refined_prompt", record.refined_prompt.value()},
                     {"truncated", record.refined_truncated}};
    put_timing(j, record, "step3");
    return j;
}

nlohmann::json stop(StopReason reason) {
    return nlohmann::json{{"reason", to_string(reason)}};
}

}  // namespace ledger_payload

std::vector<LedgerRow> session_to_rows(const RefinementSession& session) {
    std::vector<LedgerRow> rows;
    auto push = [&](int round, StepKind step, nlohmann::json payload) {
        rows.push_back(LedgerRow{session.session_id, round, step, iso8601_utc_now(),
                                 std::move(payload)});
    };
    for (const auto& record : session.rounds) {
        if (record.video) push(record.index, StepKind::gen_video, ledger_payload::gen_video(record));
        if (record.caption) push(record.index, StepKind::caption, ledger_payload::caption(record));
        if (record.rule_analysis) push(record.index, StepKind::step1, ledger_payload::step1(record));
        if (record.mismatch) push(record.index, StepKind::step2, ledger_payload::step2(record));
        if (record.scores) push(record.index, StepKind::evaluate, ledger_payload::evaluate(record));
        if (record.refined_prompt) push(record.index, StepKind::step3, ledger_payload::step3(record));
    }
    if (session.stop_reason) {
        int last_round = session.rounds.empty() ? 1 : session.rounds.back().index;
        push(last_round, StepKind::stop, ledger_payload::stop(*session.stop_reason));
    }
    return rows;
}

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path SessionStore::session_dir(const std::string& session_id) const {
    return root_ / session_id;
}

std::filesystem::path SessionStore::videos_dir(const std::string& session_id) const {
    return session_dir(session_id) / "videos";
}

bool SessionStore::exists(const std::string& session_id) const {
    return std::filesystem::exists(session_dir(session_id) / "ledger.csv");
}

std::vector<std::string> SessionStore::list_sessions() const {
    std::vector<std::string> ids;
    if (!std::filesystem::exists(root_)) return ids;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "ledger.csv")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void SessionStore::init_session(const RefinementSession& session,
                                const nlohmann::json& extra_config) {
    auto dir = session_dir(session.session_id);
    std::error_code ec;
    std::filesystem::create_directories(dir / "rounds", ec);
    std::filesystem::create_directories(dir / "videos", ec);
    if (ec) {
        throw Error(ErrorCode::storage_error,
                    fmt::format("cannot create session dir {}: {}", dir.string(), ec.message()));
    }

    nlohmann::json config = extra_config.is_object() ? extra_config : nlohmann::json::object();
    config["session_id"] = session.session_id;
    config["original_prompt"] = session.original_prompt;
    config["policy"] = session.policy;

    std::ofstream out(dir / "config.json");
    if (!out) {
        throw Error(ErrorCode::storage_error, "cannot write config.json in " + dir.string());
    }
    out << config.dump(2) << "\n";
    out.flush();
    if (!out) {
        throw Error(ErrorCode::storage_error, "failed writing config.json in " + dir.string());
    }

    SessionLedger ledger(std::make_unique<FileLedgerSink>(dir / "ledger.csv"));  // writes header
}

std::unique_ptr<SessionLedger> SessionStore::open_ledger(const std::string& session_id) {
    return std::make_unique<SessionLedger>(
        std::make_unique<FileLedgerSink>(session_dir(session_id) / "ledger.csv"));
}

void SessionStore::append_step(SessionLedger& ledger, const std::string& session_id, int round,
                               StepKind step, nlohmann::json payload) {
    ledger.append(LedgerRow{session_id, round, step, iso8601_utc_now(), std::move(payload)});
}

namespace {

[[noreturn]] void corrupt(int row_number, const std::string& what) {
    throw Error(ErrorCode::corrupt_ledger, fmt::format("ledger row {}: {}", row_number, what));
}

void apply_row(RefinementSession& session, int round, StepKind step, const nlohmann::json& payload,
               int row_number) {
    if (step == StepKind::stop) {
        if (!payload.contains("reason")) corrupt(row_number, "stop row without reason");
        session.stop_reason = parse_stop_reason(payload.at("reason").get<std::string>());
        return;
    }

    if (round < 1) corrupt(row_number, "round must be >= 1");
    if (round > static_cast<int>(session.rounds.size()) + 1) {
        corrupt(row_number, fmt::format("round {} follows round {}", round, session.rounds.size()));
    }
    if (round == static_cast<int>(session.rounds.size()) + 1) {
        RoundRecord record;
        record.index = round;
        if (round == 1) {
            record.prompt = session.original_prompt;
        } else {
            const auto& prev = session.rounds.back();
            if (!prev.refined_prompt) {
                corrupt(row_number, fmt::format("round {} starts but round {} has no refined prompt",
                                                round, round - 1));
            }
            record.prompt = *prev.refined_prompt;
        }
        session.rounds.push_back(std::move(record));
    }
    RoundRecord& record = session.rounds.back();

    auto take_timing = [&](const char* name) {
        if (payload.contains("timing_ms")) {
            record.timing_ms[name] = payload.at("timing_ms").get<std::int64_t>();
        }
    };

    switch (step) {
        case StepKind::gen_video:
            record.video = payload.at("video").get<VideoRef>();
            take_timing("gen_video");
            break;
        case StepKind::caption:
            record.caption = payload.at("caption").get<std::string>();
            take_timing("caption");
            break;
        case StepKind::step1:
            record.rule_analysis = payload.at("rule_analysis").get<RuleAnalysis>();
            take_timing("step1");
            break;
        case StepKind::step2:
            record.mismatch = payload.at("mismatch").get<MismatchReport>();
            take_timing("step2");
            break;
        case StepKind::evaluate:
            record.scores = payload.at("scores").get<ScorePair>();
            take_timing("evaluate");
            break;
        case StepKind::step3:
            record.refined_prompt = payload.at("refined_prompt").get<PromptText>();
            record.refined_truncated = payload.value("truncated", false);
            take_timing("step3");
            break;
        case StepKind::stop:
            break;  // handled above
    }
}

}  // namespace

LoadedSession SessionStore::load_session(const std::string& session_id) const {
    auto dir = session_dir(session_id);
    if (!std::filesystem::exists(dir)) {
        throw Error(ErrorCode::unknown_session, "no session directory: " + dir.string());
    }

    std::ifstream config_in(dir / "config.json");
    if (!config_in) {
        throw Error(ErrorCode::corrupt_ledger, "missing config.json in " + dir.string());
    }
    nlohmann::json config = nlohmann::json::parse(config_in, nullptr, false);
    if (config.is_discarded()) {
        throw Error(ErrorCode::corrupt_ledger, "config.json is not valid JSON in " + dir.string());
    }

    RefinementSession session;
    try {
        session.session_id = config.at("session_id").get<std::string>();
        session.original_prompt = config.at("original_prompt").get<PromptText>();
        session.policy = config.at("policy").get<RefinementPolicy>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::corrupt_ledger, fmt::format("config.json: {}", e.what()));
    }
    if (session.session_id != session_id) {
        throw Error(ErrorCode::corrupt_ledger,
                    fmt::format("config.json names session '{}', directory is '{}'",
                                session.session_id, session_id));
    }

    std::ifstream in(dir / "ledger.csv", std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::unknown_session, "no ledger.csv in " + dir.string());
    }
    CsvReader reader(in);

    auto header = reader.next_record();
    if (!header || csv_encode_row(*header) != std::string(SessionLedger::header()) + "\n") {
        throw Error(ErrorCode::corrupt_ledger, "ledger.csv header mismatch");
    }

    std::vector<std::vector<std::string>> records;
    while (auto rec = reader.next_record()) {
        records.push_back(std::move(*rec));
    }
    bool torn = reader.last_record_torn();
    // A final record with a wrong field count is treated like a torn write;
    // anywhere else it is corruption.
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].size() != 5) {
            if (i + 1 == records.size()) {
                records.pop_back();
                torn = true;
                break;
            }
            corrupt(static_cast<int>(i) + 1, fmt::format("{} fields, expected 5", records[i].size()));
        }
    }

    int prev_round = 0;
    int prev_rank = -1;
    for (std::size_t i = 0; i < records.size(); ++i) {
        int row_number = static_cast<int>(i) + 1;
        const auto& rec = records[i];

        if (rec[0] != session_id) {
            corrupt(row_number, fmt::format("row belongs to session '{}'", rec[0]));
        }
        int round = 0;
        try {
            round = std::stoi(rec[1]);
        } catch (const std::exception&) {
            corrupt(row_number, fmt::format("invalid round '{}'", rec[1]));
        }
        StepKind step;
        try {
            step = parse_step_kind(rec[2]);
        } catch (const Error&) {
            corrupt(row_number, fmt::format("invalid step '{}'", rec[2]));
        }
        nlohmann::json payload = nlohmann::json::parse(rec[4], nullptr, false);
        if (payload.is_discarded()) corrupt(row_number, "payload is not valid JSON");

        if (round < prev_round || (round == prev_round && step_rank(step) < prev_rank)) {
            corrupt(row_number, "rows out of (round, step) order");
        }
        prev_round = round;
        prev_rank = step_rank(step);

        try {
            apply_row(session, round, step, payload, row_number);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::corrupt_ledger) throw;
            corrupt(row_number, e.what());
        } catch (const nlohmann::json::exception& e) {
            corrupt(row_number, e.what());
        }
    }

    LoadedSession loaded;
    loaded.session = std::move(session);
    loaded.resumable = torn || !loaded.session.stop_reason.has_value();
    return loaded;
}

std::optional<StopReason> SessionStore::completion(const std::string& session_id) const {
    if (!exists(session_id)) return std::nullopt;
    return load_session(session_id).session.stop_reason;
}

void SessionStore::write_round_artifact(const std::string& session_id, int round,
                                        const std::string& filename,
                                        const nlohmann::json& content) const {
    auto dir = session_dir(session_id) / "rounds" / std::to_string(round);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(dir / filename);
    if (!out) {
        throw Error(ErrorCode::storage_error, "cannot write artifact " + (dir / filename).string());
    }
    out << content.dump(2) << "\n";
}

void SessionStore::write_round_text(const std::string& session_id, int round,
                                    const std::string& filename, const std::string& content) const {
    auto dir = session_dir(session_id) / "rounds" / std::to_string(round);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(dir / filename);
    if (!out) {
        throw Error(ErrorCode::storage_error, "cannot write artifact " + (dir / filename).string());
    }
    out << content;
    if (!content.empty() && content.back() != '\n') out << "\n";
}

}  // namespace t2vrefine
