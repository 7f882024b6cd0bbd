// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "t2vrefine/domain.hpp"

namespace t2vrefine {

// The three reasoning subproblems of one refinement round.
enum class SubproblemStep { rule_extraction, mismatch_analysis, stepback_refine };

const char* to_string(SubproblemStep step) noexcept;
SubproblemStep parse_subproblem_step(std::string_view s);

struct QaPair {
    std::string question;
    std::string answer;

    bool operator==(const QaPair&) const = default;
};

// One subproblem's prompt template: an instruction block whose first sentence
// is the role/context line, in-context QA examples, and a task frame with
// {{...}} placeholders. Templates ship as versioned JSON data files; see
// docs/formats.md for the file schema.
struct TemplateBundle {
    std::string version;
    SubproblemStep step = SubproblemStep::rule_extraction;
    std::string instruction;                               // [I]
    std::vector<QaPair> examples;                          // [E], at least one pair
    std::string task_frame;                                // [T], holds {{user_prompt}}
    std::string trigger = "Let's think step by step";      // [t]

    // Step-3 feedback wording, bound into {{prev_score}}. The ineffective
    // variant is used when the previous round's selected score fell below the
    // satisfaction threshold; both accept {{score}} and {{threshold}}.
    std::string score_notice;
    std::string ineffective_notice;

    static TemplateBundle load_file(const std::filesystem::path& path);

    // Throws Error(invalid_value) when the bundle breaks its invariants
    // (trigger placement, missing examples, missing required placeholders).
    void validate() const;
};

// Ablation toggles: drop the role/context sentence from [I] or drop [E].
struct RenderOptions {
    bool include_role_sentence = true;
    bool include_examples = true;

    bool operator==(const RenderOptions&) const = default;
};

// A rendered reasoner call: instruction material in system_part, instance
// material in user_part.
struct ReasonerRequest {
    std::string system_part;
    std::string user_part;
    SubproblemStep expected_schema = SubproblemStep::rule_extraction;

    bool operator==(const ReasonerRequest&) const = default;
};

ReasonerRequest render_step1(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const RenderOptions& options = {});

ReasonerRequest render_step2(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const std::string& caption, const RenderOptions& options = {});

ReasonerRequest render_step3(const TemplateBundle& bundle, const PromptText& current_prompt,
                             const RuleAnalysis& rules, const MismatchReport& mismatch,
                             const std::optional<ScorePair>& prev_score,
                             const RefinementPolicy& policy, const RenderOptions& options = {});

RuleAnalysis parse_step1(const std::string& raw);

MismatchReport parse_step2(const std::string& raw, const std::string& caption);

struct RefinedPrompt {
    PromptText prompt;
    bool truncated = false;

    bool operator==(const RefinedPrompt&) const = default;
};

// Truncates to policy.word_limit tokens when the reasoner overshoots.
RefinedPrompt parse_step3(const std::string& raw, const RefinementPolicy& policy);

// Numbered plain-text serializations embedded into the Step-3 template.
std::string serialize_rules_for_prompt(const RuleAnalysis& rules);
std::string serialize_mismatch_for_prompt(const MismatchReport& mismatch);

}  // namespace t2vrefine
