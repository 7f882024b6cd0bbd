// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2vrefine/domain.hpp"

namespace t2vrefine {

// One append-only CSV record. Rows of a session appear in nondecreasing
// (round, step-rank) order; the payload is the step's canonical JSON.
struct LedgerRow {
    std::string session_id;
    int round = 0;
    StepKind step = StepKind::gen_video;
    std::string timestamp;  // UTC ISO-8601, informational only
    nlohmann::json payload;
};

// Byte sink with rollback so a failed append never leaves a partial row
// visible. The file implementation is fsync-backed; tests inject faulty ones.
class LedgerSink {
public:
    virtual ~LedgerSink() = default;
    virtual std::uint64_t size() = 0;
    virtual void append(std::string_view bytes) = 0;
    virtual void sync() = 0;
    virtual void truncate_to(std::uint64_t size) = 0;
};

class FileLedgerSink : public LedgerSink {
public:
    explicit FileLedgerSink(const std::filesystem::path& path);
    ~FileLedgerSink() override;

    FileLedgerSink(const FileLedgerSink&) = delete;
    FileLedgerSink& operator=(const FileLedgerSink&) = delete;

    std::uint64_t size() override;
    void append(std::string_view bytes) override;
    void sync() override;
    void truncate_to(std::uint64_t size) override;

private:
    int fd_ = -1;
    std::filesystem::path path_;
};

// Append-only writer over one session's ledger.csv. Every append is flushed
// and synced before returning; on a failed write the file is rolled back to
// the previous record boundary.
class SessionLedger {
public:
    static const char* header();

    explicit SessionLedger(std::unique_ptr<LedgerSink> sink);

    void append(const LedgerRow& row);

private:
    std::unique_ptr<LedgerSink> sink_;
};

// Canonical per-step payloads; the engine appends these one step at a time
// and session_to_rows emits the identical bytes for a finished session.
namespace ledger_payload {
nlohmann::json gen_video(const RoundRecord& record);
nlohmann::json caption(const RoundRecord& record);
nlohmann::json step1(const RoundRecord& record);
nlohmann::json step2(const RoundRecord& record);
nlohmann::json evaluate(const RoundRecord& record);
nlohmann::json step3(const RoundRecord& record);
nlohmann::json stop(StopReason reason);
}  // namespace ledger_payload

// All rows for a session, in ledger order, skipping absent steps.
std::vector<LedgerRow> session_to_rows(const RefinementSession& session);

struct LoadedSession {
    RefinementSession session;
    // True when the ledger records no stop row (or ends in a torn write):
    // the final round can be re-run idempotently.
    bool resumable = false;
};

// Per-session directory layout under a root:
//   <root>/<session_id>/config.json
//   <root>/<session_id>/ledger.csv
//   <root>/<session_id>/rounds/<n>/{step1.json,step2.json,step3.json,scores.json,prompt.txt}
//   <root>/<session_id>/videos/
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path session_dir(const std::string& session_id) const;
    std::filesystem::path videos_dir(const std::string& session_id) const;
    bool exists(const std::string& session_id) const;
    std::vector<std::string> list_sessions() const;

    // Creates the directory skeleton, writes config.json and the CSV header.
    // extra_config is merged into config.json (used for the effective CLI config).
    void init_session(const RefinementSession& session,
                      const nlohmann::json& extra_config = nlohmann::json::object());

    std::unique_ptr<SessionLedger> open_ledger(const std::string& session_id);

    // Appends one step row (timestamped now) to the session's ledger.
    void append_step(SessionLedger& ledger, const std::string& session_id, int round, StepKind step,
                     nlohmann::json payload);

    LoadedSession load_session(const std::string& session_id) const;

    // Stop reason of a finished session, or nullopt when absent/unfinished.
    std::optional<StopReason> completion(const std::string& session_id) const;

    void write_round_artifact(const std::string& session_id, int round,
                              const std::string& filename, const nlohmann::json& content) const;
    void write_round_text(const std::string& session_id, int round, const std::string& filename,
                          const std::string& content) const;

private:
    std::filesystem::path root_;
};

}  // namespace t2vrefine
