// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/prompt_kit.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "t2vrefine/errors.hpp"
#include "t2vrefine/json_extract.hpp"
#include "t2vrefine/text.hpp"

namespace t2vrefine {

const char* to_string(SubproblemStep step) noexcept {
    switch (step) {
        case SubproblemStep::rule_extraction: return "rule_extraction";
        case SubproblemStep::mismatch_analysis: return "mismatch_analysis";
        case SubproblemStep::stepback_refine: return "stepback_refine";
    }
    return "rule_extraction";
}

SubproblemStep parse_subproblem_step(std::string_view s) {
    if (s == "rule_extraction") return SubproblemStep::rule_extraction;
    if (s == "mismatch_analysis") return SubproblemStep::mismatch_analysis;
    if (s == "stepback_refine") return SubproblemStep::stepback_refine;
    throw Error(ErrorCode::invalid_value, fmt::format("unknown subproblem step: '{}'", s));
}

namespace {

constexpr const char* kDefaultScoreNotice =
    "The video produced in the previous round was scored {{score}} by the evaluator "
    "(satisfaction threshold {{threshold}}).";

constexpr const char* kDefaultIneffectiveNotice =
    "The refined prompt produced in the previous round was ineffective: the evaluator scored its "
    "video {{score}}, below the threshold {{threshold}}. Do not continue that line of reasoning; "
    "take a different reasoning path and rewrite the prompt from another angle.";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::size_t pos = text.find(needle);
    while (pos != std::string_view::npos) {
        ++n;
        pos = text.find(needle, pos + needle.size());
    }
    return n;
}

// Single-pass substitution: bound values are emitted verbatim and never
// rescanned, so braces inside them stay literal. Every {{key}} in the
// template must be bound.
std::string replace_placeholders(std::string_view tmpl,
                                 const std::map<std::string, std::string>& bindings,
                                 std::map<std::string, int>& substituted) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            std::size_t close = tmpl.find("}}", i + 2);
            if (close != std::string_view::npos) {
                std::string key(tmpl.substr(i + 2, close - (i + 2)));
                auto it = bindings.find(key);
                if (it == bindings.end()) {
                    throw Error(ErrorCode::missing_placeholder,
                                fmt::format("template placeholder '{{{{{}}}}}' has no binding", key));
                }
                out += it->second;
                ++substituted[key];
                i = close + 2;
                continue;
            }
        }
        out += tmpl[i];
        ++i;
    }
    return out;
}

void require_substituted(const std::map<std::string, int>& substituted, const char* key) {
    auto it = substituted.find(key);
    if (it == substituted.end() || it->second == 0) {
        throw Error(ErrorCode::missing_placeholder,
                    fmt::format("placeholder '{{{{{}}}}}' absent from task frame", key));
    }
}

std::string instruction_text(const TemplateBundle& bundle, const RenderOptions& options) {
    if (options.include_role_sentence) return bundle.instruction;
    // The role/context line is the first sentence of [I].
    std::size_t dot = bundle.instruction.find(". ");
    if (dot == std::string::npos) {
        dot = bundle.instruction.find(".\n");
        if (dot == std::string::npos) return bundle.instruction;
    }
    return trim(bundle.instruction.substr(dot + 2));
}

std::string examples_block(const TemplateBundle& bundle) {
    std::string out = "Examples:\n";
    for (const auto& qa : bundle.examples) {
        out += "Q: " + qa.question + "\n";
        out += "A: " + qa.answer + "\n\n";
    }
    return out;
}

std::string build_system_part(const TemplateBundle& bundle, const RenderOptions& options) {
    std::string out = instruction_text(bundle, options);
    if (options.include_examples) {
        out += "\n\n";
        out += examples_block(bundle);
    }
    return trim(out) + "\n";
}

void require_step(const TemplateBundle& bundle, SubproblemStep expected) {
    if (bundle.step != expected) {
        throw Error(ErrorCode::invalid_value,
                    fmt::format("bundle is for step {}, expected {}", to_string(bundle.step),
                                to_string(expected)));
    }
}

}  // namespace

void TemplateBundle::validate() const {
    if (examples.empty()) {
        throw Error(ErrorCode::invalid_value, "template bundle needs at least one QA example");
    }
    for (const auto& qa : examples) {
        if (trim(qa.question).empty() || trim(qa.answer).empty()) {
            throw Error(ErrorCode::invalid_value, "QA example has an empty question or answer");
        }
    }
    if (trigger != "Let's think step by step") {
        throw Error(ErrorCode::invalid_value,
                    "trigger must be exactly \"Let's think step by step\"");
    }
    if (trim(instruction).empty()) {
        throw Error(ErrorCode::invalid_value, "instruction is empty");
    }
    if (trim(task_frame).empty()) {
        throw Error(ErrorCode::invalid_value, "task frame is empty");
    }

    std::size_t in_frame = count_occurrences(task_frame, trigger);
    std::size_t elsewhere = count_occurrences(instruction, trigger);
    for (const auto& qa : examples) {
        elsewhere += count_occurrences(qa.question, trigger);
        elsewhere += count_occurrences(qa.answer, trigger);
    }
    if (step == SubproblemStep::stepback_refine) {
        elsewhere += count_occurrences(score_notice, trigger);
        elsewhere += count_occurrences(ineffective_notice, trigger);
        if (in_frame + elsewhere != 0) {
            throw Error(ErrorCode::invalid_value,
                        "step-back bundle must not contain the trigger phrase");
        }
    } else {
        if (in_frame != 1 || elsewhere != 0) {
            throw Error(ErrorCode::invalid_value,
                        "bundle must contain the trigger phrase exactly once, in the task frame");
        }
    }
}

TemplateBundle TemplateBundle::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::config_error,
                    fmt::format("cannot open template bundle: {}", path.string()));
    }
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::config_error,
                    fmt::format("template bundle is not valid JSON: {}", path.string()));
    }

    TemplateBundle bundle;
    bundle.version = j.value("version", std::string{"1"});
    try {
        bundle.step = parse_subproblem_step(j.at("step").get<std::string>());
        bundle.instruction = j.at("instruction").get<std::string>();
        for (const auto& qa : j.at("examples")) {
            bundle.examples.push_back(
                QaPair{qa.at("question").get<std::string>(), qa.at("answer").get<std::string>()});
        }
        bundle.task_frame = j.at("task_frame").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config_error,
                    fmt::format("template bundle {}: {}", path.string(), e.what()));
    }
    bundle.trigger = j.value("trigger", std::string{"Let's think step by step"});
    bundle.score_notice = j.value("score_notice", std::string{kDefaultScoreNotice});
    bundle.ineffective_notice = j.value("ineffective_notice", std::string{kDefaultIneffectiveNotice});
    bundle.validate();
    return bundle;
}

ReasonerRequest render_step1(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const RenderOptions& options) {
    require_step(bundle, SubproblemStep::rule_extraction);

    std::map<std::string, std::string> bindings{{"user_prompt", current_prompt.text}};
    std::map<std::string, int> substituted;
    ReasonerRequest request;
    request.system_part = build_system_part(bundle, options);
    request.user_part = replace_placeholders(bundle.task_frame, bindings, substituted);
    request.expected_schema = SubproblemStep::rule_extraction;
    require_substituted(substituted, "user_prompt");
    return request;
}

ReasonerRequest render_step2(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const std::string& caption, const RenderOptions& options) {
    require_step(bundle, SubproblemStep::mismatch_analysis);
    if (trim(caption).empty()) {
        throw Error(ErrorCode::empty_caption, "caption is empty");
    }

    std::map<std::string, std::string> bindings{{"user_prompt", current_prompt.text},
                                                {"caption", caption}};
    std::map<std::string, int> substituted;
    ReasonerRequest request;
    request.system_part = build_system_part(bundle, options);
    request.user_part = replace_placeholders(bundle.task_frame, bindings, substituted);
    request.expected_schema = SubproblemStep::mismatch_analysis;
    require_substituted(substituted, "user_prompt");
    require_substituted(substituted, "caption");
    return request;
}

ReasonerRequest render_step3(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const RuleAnalysis& rules, const MismatchReport& mismatch,
                             const std::optional<ScorePair>& prev_score,
                             const RefinementPolicy& policy, const RenderOptions& options) {
    require_step(bundle, SubproblemStep::stepback_refine);

    // Round 1 has no previous refinement, so no score line at all. From round
    // 2 on the evaluator feedback either reports the score or, below the
    // threshold, flags the previous reasoning path as ineffective.
    std::string score_text;
    if (prev_score) {
        double selected = prev_score->select(policy.gating_score_selector);
        const std::string& frame = selected < policy.satisfaction_threshold
                                       ? bundle.ineffective_notice
                                       : bundle.score_notice;
        std::map<std::string, std::string> score_bindings{
            {"score", format_score(selected)},
            {"threshold", format_score(policy.satisfaction_threshold)}};
        std::map<std::string, int> ignored;
        score_text = replace_placeholders(frame, score_bindings, ignored);
    }

    std::map<std::string, std::string> bindings{
        {"user_prompt", current_prompt.text},
        {"physical_rules", serialize_rules_for_prompt(rules)},
        {"mismatch", serialize_mismatch_for_prompt(mismatch)},
        {"prev_score", score_text},
        {"word_limit", std::to_string(policy.word_limit)}};
    std::map<std::string, int> substituted;
    ReasonerRequest request;
    request.system_part = build_system_part(bundle, options);
    request.user_part = replace_placeholders(bundle.task_frame, bindings, substituted);
    request.expected_schema = SubproblemStep::stepback_refine;
    require_substituted(substituted, "user_prompt");
    require_substituted(substituted, "physical_rules");
    require_substituted(substituted, "mismatch");
    require_substituted(substituted, "prev_score");
    require_substituted(substituted, "word_limit");
    return request;
}

std::string serialize_rules_for_prompt(const RuleAnalysis& rules) {
    std::string out = "Main objects:\n";
    for (std::size_t i = 0; i < rules.main_objects.size(); ++i) {
        out += fmt::format("{}. {}\n", i + 1, rules.main_objects[i]);
    }
    out += "Physical rules:\n";
    for (std::size_t i = 0; i < rules.physical_rules.size(); ++i) {
        out += fmt::format("{}. {}\n", i + 1, rules.physical_rules[i]);
    }
    return trim(out);
}

std::string serialize_mismatch_for_prompt(const MismatchReport& mismatch) {
    if (mismatch.mismatches.empty()) {
        return "No mismatch: the video caption matches the prompt.";
    }
    std::string out;
    for (std::size_t i = 0; i < mismatch.mismatches.size(); ++i) {
        const auto& m = mismatch.mismatches[i];
        out += fmt::format("{}. {}: the prompt said \"{}\" but the video showed \"{}\"\n", i + 1,
                           m.aspect, m.prompt_said, m.video_showed);
    }
    return trim(out);
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        throw Error(ErrorCode::schema_mismatch, fmt::format("missing list '{}'", key));
    }
    std::vector<std::string> out;
    for (const auto& item : *it) {
        if (!item.is_string()) {
            throw Error(ErrorCode::schema_mismatch,
                        fmt::format("'{}' entries must be strings", key));
        }
        std::string s = trim(item.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    if (out.empty()) {
        throw Error(ErrorCode::schema_mismatch, fmt::format("'{}' is empty", key));
    }
    return out;
}

}  // namespace

RuleAnalysis parse_step1(const std::string& raw) {
    nlohmann::json j = extract_first_json_object(raw);
    RuleAnalysis analysis;
    analysis.main_objects = string_list(j, "main_objects");
    analysis.physical_rules = string_list(j, "physical_rules");
    analysis.raw_reasoner_output = raw;
    return analysis;
}

MismatchReport parse_step2(const std::string& raw, const std::string& caption) {
    nlohmann::json j = extract_first_json_object(raw);
    auto it = j.find("mismatches");
    if (it == j.end() || !it->is_array()) {
        throw Error(ErrorCode::schema_mismatch, "missing list 'mismatches'");
    }
    MismatchReport report;
    for (const auto& item : *it) {
        if (!item.is_object()) {
            throw Error(ErrorCode::schema_mismatch, "'mismatches' entries must be objects");
        }
        MismatchItem m;
        for (auto [key, dst] : {std::pair<const char*, std::string*>{"aspect", &m.aspect},
                                {"prompt_said", &m.prompt_said},
                                {"video_showed", &m.video_showed}}) {
            auto f = item.find(key);
            if (f == item.end() || !f->is_string() || trim(f->get<std::string>()).empty()) {
                throw Error(ErrorCode::schema_mismatch,
                            fmt::format("mismatch entry needs non-empty '{}'", key));
            }
            *dst = f->get<std::string>();
        }
        report.mismatches.push_back(std::move(m));
    }
    report.caption = caption;
    report.raw_reasoner_output = raw;
    return report;
}

RefinedPrompt parse_step3(const std::string& raw, const RefinementPolicy& policy) {
    nlohmann::json j = extract_first_json_object(raw);
    auto it = j.find("refined_prompt");
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::schema_mismatch, "missing string 'refined_prompt'");
    }
    std::string text = trim(it->get<std::string>());
    if (text.empty()) {
        throw Error(ErrorCode::schema_mismatch, "'refined_prompt' is empty");
    }

    RefinedPrompt result;
    auto limit = static_cast<std::size_t>(policy.word_limit);
    if (count_words(text) > limit) {
        text = truncate_words(text, limit);
        result.truncated = true;
    }
    result.prompt = PromptText::from_text(text);
    return result;
}

}  // namespace t2vrefine
