// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace t2vrefine {

// A text-to-video prompt plus its whitespace-token word count. Construction
// trims and rejects empty text; word_count always matches count_words(text).
struct PromptText {
    std::string text;
    std::size_t word_count = 0;

    static PromptText from_text(std::string_view raw);

    bool operator==(const PromptText&) const = default;
};

// Physical rules and main objects extracted from the prompt (Step 1 output).
// Rules are expected to be descriptive prose; lint_physical_rules reports
// formula-looking entries instead of rejecting them.
struct RuleAnalysis {
    std::vector<std::string> main_objects;
    std::vector<std::string> physical_rules;
    std::string raw_reasoner_output;

    bool operator==(const RuleAnalysis&) const = default;
};

// Heuristic prose check: flags '=' adjacent to a digit and LaTeX-style math
// delimiters ($ ... $, \( \), \[ \]). Returns one description per offending rule.
std::vector<std::string> lint_physical_rules(const RuleAnalysis& analysis);

struct MismatchItem {
    std::string aspect;
    std::string prompt_said;
    std::string video_showed;

    bool operator==(const MismatchItem&) const = default;
};

// Prompt/caption discrepancies (Step 2 output). May be empty on a perfect match.
struct MismatchReport {
    std::vector<MismatchItem> mismatches;
    std::string caption;
    std::string raw_reasoner_output;

    bool operator==(const MismatchReport&) const = default;
};

enum class GatingScoreSelector { pc, sa, min_of_both };

// Evaluator output: physical common sense and semantic adherence, both in [0,1].
struct ScorePair {
    double pc = 0.0;
    double sa = 0.0;

    // Throws Error(invalid_value) outside [0,1] x [0,1].
    static ScorePair of(double pc, double sa);

    double select(GatingScoreSelector selector) const;

    bool operator==(const ScorePair&) const = default;
};

// Locator plus generation parameters of one produced video. No pixel data.
struct VideoRef {
    std::string locator;
    double duration_s = 0.0;
    int fps = 0;
    int width = 0;
    int height = 0;

    static VideoRef make(std::string locator, double duration_s, int fps, int width, int height);

    bool operator==(const VideoRef&) const = default;
};

struct RoundRecord {
    int index = 1;
    PromptText prompt;
    std::optional<VideoRef> video;
    std::optional<std::string> caption;
    std::optional<RuleAnalysis> rule_analysis;
    std::optional<MismatchReport> mismatch;
    std::optional<ScorePair> scores;
    std::optional<PromptText> refined_prompt;
    bool refined_truncated = false;
    std::map<std::string, std::int64_t> timing_ms;

    bool operator==(const RoundRecord&) const = default;
};

struct RefinementPolicy {
    int max_rounds = 4;
    double satisfaction_threshold = 0.5;  // tau
    double convergence_epsilon = 0.05;
    int convergence_window = 1;  // k consecutive round-pair deltas
    GatingScoreSelector gating_score_selector = GatingScoreSelector::min_of_both;
    int word_limit = 120;

    // Throws Error(invalid_value) on out-of-range fields.
    void validate() const;

    bool operator==(const RefinementPolicy&) const = default;
};

enum class StopReason { satisfied, converged, round_cap, backend_failure };

struct RefinementSession {
    std::string session_id;
    PromptText original_prompt;
    RefinementPolicy policy;
    std::vector<RoundRecord> rounds;
    std::optional<StopReason> stop_reason;

    bool operator==(const RefinementSession&) const = default;
};

// Checks every domain invariant over a session; violations are returned as
// data, one description each, never thrown.
std::vector<std::string> validate_session(const RefinementSession& session);

enum class DatasetSource { videophy, phygenbench, custom };

enum class PhysicsCategory {
    solid_solid,
    solid_fluid,
    fluid_fluid,
    mechanics,
    optics,
    thermal,
    uncategorized,
};

// videophy entries carry solid/fluid interaction categories, phygenbench
// entries the mechanics/optics/thermal ones; uncategorized is always allowed.
bool category_allowed_for_source(DatasetSource source, PhysicsCategory category);

struct DatasetEntry {
    std::string id;
    PromptText prompt;
    DatasetSource source = DatasetSource::custom;
    PhysicsCategory category = PhysicsCategory::uncategorized;

    bool operator==(const DatasetEntry&) const = default;
};

struct RoundStats {
    double mean_pc = 0.0;
    double mean_sa = 0.0;
    std::size_t n = 0;

    bool operator==(const RoundStats&) const = default;
};

struct AggregateReport {
    std::map<int, RoundStats> per_round;
    std::map<PhysicsCategory, RoundStats> per_category;
    double binarize_threshold = 0.5;
    std::size_t excluded = 0;  // sessions lacking the requested round

    bool operator==(const AggregateReport&) const = default;
};

// Ledger step kinds, in the per-round execution (and on-disk) order.
enum class StepKind { gen_video, caption, step1, step2, evaluate, step3, stop };

int step_rank(StepKind step) noexcept;

// Enum <-> canonical snake_case string mappings (parse_* throw invalid_value).
const char* to_string(GatingScoreSelector v) noexcept;
const char* to_string(StopReason v) noexcept;
const char* to_string(DatasetSource v) noexcept;
const char* to_string(PhysicsCategory v) noexcept;
const char* to_string(StepKind v) noexcept;
GatingScoreSelector parse_gating_score_selector(std::string_view s);
StopReason parse_stop_reason(std::string_view s);
DatasetSource parse_dataset_source(std::string_view s);
PhysicsCategory parse_physics_category(std::string_view s);
StepKind parse_step_kind(std::string_view s);

// Canonical JSON (snake_case keys) for every domain type; this encoding is
// the ledger payload and report format. from_json re-validates invariants.
void to_json(nlohmann::json& j, const PromptText& v);
void from_json(const nlohmann::json& j, PromptText& v);
void to_json(nlohmann::json& j, const RuleAnalysis& v);
void from_json(const nlohmann::json& j, RuleAnalysis& v);
void to_json(nlohmann::json& j, const MismatchItem& v);
void from_json(const nlohmann::json& j, MismatchItem& v);
void to_json(nlohmann::json& j, const MismatchReport& v);
void from_json(const nlohmann::json& j, MismatchReport& v);
void to_json(nlohmann::json& j, const ScorePair& v);
void from_json(const nlohmann::json& j, ScorePair& v);
void to_json(nlohmann::json& j, const VideoRef& v);
void from_json(const nlohmann::json& j, VideoRef& v);
void to_json(nlohmann::json& j, const RoundRecord& v);
void from_json(const nlohmann::json& j, RoundRecord& v);
void to_json(nlohmann::json& j, const RefinementPolicy& v);
void from_json(const nlohmann::json& j, RefinementPolicy& v);
void to_json(nlohmann::json& j, const RefinementSession& v);
void from_json(const nlohmann::json& j, RefinementSession& v);
void to_json(nlohmann::json& j, const DatasetEntry& v);
void from_json(const nlohmann::json& j, DatasetEntry& v);
void to_json(nlohmann::json& j, const RoundStats& v);
void from_json(const nlohmann::json& j, RoundStats& v);
void to_json(nlohmann::json& j, const AggregateReport& v);
void from_json(const nlohmann::json& j, AggregateReport& v);

}  // namespace t2vrefine
