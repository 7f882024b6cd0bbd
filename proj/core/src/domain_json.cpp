// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSON encoding for the domain types: snake_case keys, stable field
// names. This is what the ledger, session directory and report files contain.
#include "t2vrefine/domain.hpp"

#include <fmt/format.h>

#include "t2vrefine/errors.hpp"
#include "t2vrefine/text.hpp"

namespace t2vrefine {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw Error(ErrorCode::invalid_value, fmt::format("missing key '{}'", key));
    }
    return *it;
}

}  // namespace

void to_json(nlohmann::json& j, const PromptText& v) {
    j = nlohmann::json{{"text", v.text}, {"word_count", v.word_count}};
}

void from_json(const nlohmann::json& j, PromptText& v) {
    v = PromptText::from_text(require(j, "text").get<std::string>());
    if (j.contains("word_count")) {
        auto stored = j.at("word_count").get<std::size_t>();
        if (stored != v.word_count) {
            throw Error(ErrorCode::invalid_value,
                        fmt::format("word_count {} does not match text ({} tokens)", stored,
                                    v.word_count));
        }
    }
}

void to_json(nlohmann::json& j, const RuleAnalysis& v) {
    j = nlohmann::json{{"main_objects", v.main_objects},
                       {"physical_rules", v.physical_rules},
                       {"raw_reasoner_output", v.raw_reasoner_output}};
}

void from_json(const nlohmann::json& j, RuleAnalysis& v) {
    require(j, "main_objects").get_to(v.main_objects);
    require(j, "physical_rules").get_to(v.physical_rules);
    if (v.main_objects.empty()) {
        throw Error(ErrorCode::invalid_value, "rule analysis needs at least one main object");
    }
    if (v.physical_rules.empty()) {
        throw Error(ErrorCode::invalid_value, "rule analysis needs at least one physical rule");
    }
    v.raw_reasoner_output = j.value("raw_reasoner_output", std::string{});
}

void to_json(nlohmann::json& j, const MismatchItem& v) {
    j = nlohmann::json{{"aspect", v.aspect},
                       {"prompt_said", v.prompt_said},
                       {"video_showed", v.video_showed}};
}

void from_json(const nlohmann::json& j, MismatchItem& v) {
    require(j, "aspect").get_to(v.aspect);
    require(j, "prompt_said").get_to(v.prompt_said);
    require(j, "video_showed").get_to(v.video_showed);
    if (v.aspect.empty() || v.prompt_said.empty() || v.video_showed.empty()) {
        throw Error(ErrorCode::invalid_value, "mismatch entry has an empty field");
    }
}

void to_json(nlohmann::json& j, const MismatchReport& v) {
    j = nlohmann::json{{"mismatches", v.mismatches},
                       {"caption", v.caption},
                       {"raw_reasoner_output", v.raw_reasoner_output}};
}

void from_json(const nlohmann::json& j, MismatchReport& v) {
    require(j, "mismatches").get_to(v.mismatches);
    v.caption = j.value("caption", std::string{});
    v.raw_reasoner_output = j.value("raw_reasoner_output", std::string{});
}

void to_json(nlohmann::json& j, const ScorePair& v) {
    j = nlohmann::json{{"pc", v.pc}, {"sa", v.sa}};
}

void from_json(const nlohmann::json& j, ScorePair& v) {
    v = ScorePair::of(require(j, "pc").get<double>(), require(j, "sa").get<double>());
}

void to_json(nlohmann::json& j, const VideoRef& v) {
    j = nlohmann::json{{"locator", v.locator},
                       {"duration_s", v.duration_s},
                       {"fps", v.fps},
                       {"width", v.width},
                       {"height", v.height}};
}

void from_json(const nlohmann::json& j, VideoRef& v) {
    v = VideoRef::make(require(j, "locator").get<std::string>(),
                       require(j, "duration_s").get<double>(), require(j, "fps").get<int>(),
                       require(j, "width").get<int>(), require(j, "height").get<int>());
}

void to_json(nlohmann::json& j, const RoundRecord& v) {
    j = nlohmann::json{{"index", v.index},
                       {"prompt", v.prompt},
                       {"refined_truncated", v.refined_truncated},
                       {"timing_ms", v.timing_ms}};
    if (v.video) j["video"] = *v.video;
    if (v.caption) j["caption"] = *v.caption;
    if (v.rule_analysis) j["rule_analysis"] = *v.rule_analysis;
    if (v.mismatch) j["mismatch"] = *v.mismatch;
    if (v.scores) j["scores"] = *v.scores;
    if (v.refined_prompt) j["refined_prompt"] = *v.refined_prompt;
}

void from_json(const nlohmann::json& j, RoundRecord& v) {
    v = RoundRecord{};
    require(j, "index").get_to(v.index);
    if (v.index < 1) throw Error(ErrorCode::invalid_value, "round index must be >= 1");
    require(j, "prompt").get_to(v.prompt);
    if (j.contains("video")) v.video = j.at("video").get<VideoRef>();
    if (j.contains("caption")) v.caption = j.at("caption").get<std::string>();
    if (j.contains("rule_analysis")) v.rule_analysis = j.at("rule_analysis").get<RuleAnalysis>();
    if (j.contains("mismatch")) v.mismatch = j.at("mismatch").get<MismatchReport>();
    if (j.contains("scores")) v.scores = j.at("scores").get<ScorePair>();
    if (j.contains("refined_prompt")) v.refined_prompt = j.at("refined_prompt").get<PromptText>();
    v.refined_truncated = j.value("refined_truncated", false);
    if (j.contains("timing_ms")) j.at("timing_ms").get_to(v.timing_ms);
}

void to_json(nlohmann::json& j, const RefinementPolicy& v) {
    j = nlohmann::json{{"max_rounds", v.max_rounds},
                       {"satisfaction_threshold", v.satisfaction_threshold},
                       {"convergence_epsilon", v.convergence_epsilon},
                       {"convergence_window", v.convergence_window},
                       {"gating_score_selector", to_string(v.gating_score_selector)},
                       {"word_limit", v.word_limit}};
}

void from_json(const nlohmann::json& j, RefinementPolicy& v) {
    v = RefinementPolicy{};
    v.max_rounds = j.value("max_rounds", v.max_rounds);
    v.satisfaction_threshold = j.value("satisfaction_threshold", v.satisfaction_threshold);
    v.convergence_epsilon = j.value("convergence_epsilon", v.convergence_epsilon);
    v.convergence_window = j.value("convergence_window", v.convergence_window);
    if (j.contains("gating_score_selector")) {
        v.gating_score_selector =
            parse_gating_score_selector(j.at("gating_score_selector").get<std::string>());
    }
    v.word_limit = j.value("word_limit", v.word_limit);
    v.validate();
}

void to_json(nlohmann::json& j, const RefinementSession& v) {
    j = nlohmann::json{{"session_id", v.session_id},
                       {"original_prompt", v.original_prompt},
                       {"policy", v.policy},
                       {"rounds", v.rounds}};
    if (v.stop_reason) j["stop_reason"] = to_string(*v.stop_reason);
}

void from_json(const nlohmann::json& j, RefinementSession& v) {
    v = RefinementSession{};
    require(j, "session_id").get_to(v.session_id);
    require(j, "original_prompt").get_to(v.original_prompt);
    require(j, "policy").get_to(v.policy);
    if (j.contains("rounds")) j.at("rounds").get_to(v.rounds);
    if (j.contains("stop_reason")) {
        v.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    }
}

void to_json(nlohmann::json& j, const DatasetEntry& v) {
    j = nlohmann::json{{"id", v.id},
                       {"prompt", v.prompt.text},
                       {"source", to_string(v.source)},
                       {"category", to_string(v.category)}};
}

void from_json(const nlohmann::json& j, DatasetEntry& v) {
    v = DatasetEntry{};
    require(j, "id").get_to(v.id);
    v.prompt = PromptText::from_text(require(j, "prompt").get<std::string>());
    v.source = parse_dataset_source(require(j, "source").get<std::string>());
    v.category = parse_physics_category(require(j, "category").get<std::string>());
}

void to_json(nlohmann::json& j, const RoundStats& v) {
    j = nlohmann::json{{"mean_pc", v.mean_pc}, {"mean_sa", v.mean_sa}, {"n", v.n}};
}

void from_json(const nlohmann::json& j, RoundStats& v) {
    require(j, "mean_pc").get_to(v.mean_pc);
    require(j, "mean_sa").get_to(v.mean_sa);
    require(j, "n").get_to(v.n);
}

void to_json(nlohmann::json& j, const AggregateReport& v) {
    nlohmann::json per_round = nlohmann::json::object();
    for (const auto& [round, stats] : v.per_round) per_round[std::to_string(round)] = stats;
    nlohmann::json per_category = nlohmann::json::object();
    for (const auto& [cat, stats] : v.per_category) per_category[to_string(cat)] = stats;
    j = nlohmann::json{{"per_round", per_round},
                       {"per_category", per_category},
                       {"binarize_threshold", v.binarize_threshold},
                       {"excluded", v.excluded}};
}

void from_json(const nlohmann::json& j, AggregateReport& v) {
    v = AggregateReport{};
    for (const auto& [key, value] : require(j, "per_round").items()) {
        v.per_round[std::stoi(key)] = value.get<RoundStats>();
    }
    for (const auto& [key, value] : require(j, "per_category").items()) {
        v.per_category[parse_physics_category(key)] = value.get<RoundStats>();
    }
    v.binarize_threshold = j.value("binarize_threshold", 0.5);
    v.excluded = j.value("excluded", std::size_t{0});
}

}  // namespace t2vrefine
