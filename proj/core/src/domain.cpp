// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/domain.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "t2vrefine/errors.hpp"
#include "t2vrefine/text.hpp"

namespace t2vrefine {

PromptText PromptText::from_text(std::string_view raw) {
    std::string trimmed = trim(raw);
    if (trimmed.empty()) {
        throw Error(ErrorCode::invalid_value, "prompt text is empty after trimming");
    }
    PromptText p;
    p.text = std::move(trimmed);
    p.word_count = count_words(p.text);
    return p;
}

namespace {

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

// '=' with a digit immediately before or after, e.g. "v=9.8".
bool has_formula_equals(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '=') continue;
        if (i > 0 && is_digit(s[i - 1])) return true;
        if (i + 1 < s.size() && is_digit(s[i + 1])) return true;
    }
    return false;
}

bool has_math_delimiters(const std::string& s) {
    if (s.find('$') != std::string::npos) return true;
    for (const char* d : {"\\(", "\\)", "\\[", "\\]"}) {
        if (s.find(d) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> lint_physical_rules(const RuleAnalysis& analysis) {
    std::vector<std::string> violations;
    for (std::size_t i = 0; i < analysis.physical_rules.size(); ++i) {
        const auto& rule = analysis.physical_rules[i];
        if (has_formula_equals(rule)) {
            violations.push_back(fmt::format(
                "physical_rules[{}] looks like a formula ('=' adjacent to a digit): {}", i, rule));
        }
        if (has_math_delimiters(rule)) {
            violations.push_back(fmt::format(
                "physical_rules[{}] contains math delimiters: {}", i, rule));
        }
    }
    return violations;
}

ScorePair ScorePair::of(double pc, double sa) {
    if (!(pc >= 0.0 && pc <= 1.0) || !(sa >= 0.0 && sa <= 1.0)) {
        throw Error(ErrorCode::invalid_value,
                    fmt::format("score outside [0,1]: pc={} sa={}", pc, sa));
    }
    return ScorePair{pc, sa};
}

double ScorePair::select(GatingScoreSelector selector) const {
    switch (selector) {
        case GatingScoreSelector::pc: return pc;
        case GatingScoreSelector::sa: return sa;
        case GatingScoreSelector::min_of_both: return std::min(pc, sa);
    }
    return std::min(pc, sa);
}

VideoRef VideoRef::make(std::string locator, double duration_s, int fps, int width, int height) {
    VideoRef v{std::move(locator), duration_s, fps, width, height};
    if (v.locator.empty()) throw Error(ErrorCode::invalid_value, "video locator is empty");
    if (!(v.duration_s > 0.0)) throw Error(ErrorCode::invalid_value, "video duration must be > 0");
    if (v.fps < 1) throw Error(ErrorCode::invalid_value, "fps must be >= 1");
    if (v.width < 16 || v.height < 16) {
        throw Error(ErrorCode::invalid_value, "video dimensions must be >= 16 px");
    }
    return v;
}

void RefinementPolicy::validate() const {
    if (max_rounds < 1) throw Error(ErrorCode::invalid_value, "max_rounds must be >= 1");
    if (!(satisfaction_threshold >= 0.0 && satisfaction_threshold <= 1.0)) {
        throw Error(ErrorCode::invalid_value, "satisfaction_threshold must be in [0,1]");
    }
    if (convergence_epsilon < 0.0) {
        throw Error(ErrorCode::invalid_value, "convergence_epsilon must be >= 0");
    }
    if (convergence_window < 1) {
        throw Error(ErrorCode::invalid_value, "convergence_window must be >= 1");
    }
    if (word_limit < 1) throw Error(ErrorCode::invalid_value, "word_limit must be >= 1");
}

namespace {

void check_prompt(const PromptText& p, const std::string& where, std::vector<std::string>& out) {
    if (trim(p.text).empty()) {
        out.push_back(where + ": prompt text is empty after trimming");
    } else if (p.word_count != count_words(p.text)) {
        out.push_back(fmt::format("{}: word_count {} does not match text ({} tokens)", where,
                                  p.word_count, count_words(p.text)));
    }
}

void check_scores(const ScorePair& s, const std::string& where, std::vector<std::string>& out) {
    if (!(s.pc >= 0.0 && s.pc <= 1.0)) out.push_back(fmt::format("{}: pc {} outside [0,1]", where, s.pc));
    if (!(s.sa >= 0.0 && s.sa <= 1.0)) out.push_back(fmt::format("{}: sa {} outside [0,1]", where, s.sa));
}

void check_video(const VideoRef& v, const std::string& where, std::vector<std::string>& out) {
    if (v.locator.empty()) out.push_back(where + ": video locator is empty");
    if (!(v.duration_s > 0.0)) out.push_back(where + ": video duration must be > 0");
    if (v.fps < 1) out.push_back(where + ": fps must be >= 1");
    if (v.width < 16 || v.height < 16) out.push_back(where + ": dimensions must be >= 16 px");
}

}  // namespace

std::vector<std::string> validate_session(const RefinementSession& session) {
    std::vector<std::string> out;

    try {
        session.policy.validate();
    } catch (const Error& e) {
        out.push_back(std::string("policy: ") + e.what());
    }
    check_prompt(session.original_prompt, "original_prompt", out);

    if (static_cast<int>(session.rounds.size()) > session.policy.max_rounds) {
        out.push_back(fmt::format("session has {} rounds, policy allows {}", session.rounds.size(),
                                  session.policy.max_rounds));
    }

    for (std::size_t i = 0; i < session.rounds.size(); ++i) {
        const auto& r = session.rounds[i];
        const std::string where = fmt::format("round {}", i + 1);

        if (r.index != static_cast<int>(i) + 1) {
            out.push_back(fmt::format("{}: index is {}, expected {}", where, r.index, i + 1));
        }
        check_prompt(r.prompt, where + " prompt", out);
        if (r.video) check_video(*r.video, where, out);
        if (r.scores) check_scores(*r.scores, where, out);

        if (r.rule_analysis) {
            if (r.rule_analysis->main_objects.empty()) {
                out.push_back(where + ": rule analysis has no main objects");
            }
            if (r.rule_analysis->physical_rules.empty()) {
                out.push_back(where + ": rule analysis has no physical rules");
            }
            for (auto& v : lint_physical_rules(*r.rule_analysis)) {
                out.push_back(where + ": " + v);
            }
        }
        if (r.mismatch) {
            for (std::size_t m = 0; m < r.mismatch->mismatches.size(); ++m) {
                const auto& item = r.mismatch->mismatches[m];
                if (item.aspect.empty() || item.prompt_said.empty() || item.video_showed.empty()) {
                    out.push_back(fmt::format("{}: mismatch entry {} has an empty field", where, m));
                }
            }
        }
        if (r.refined_prompt) {
            check_prompt(*r.refined_prompt, where + " refined_prompt", out);
            if (r.refined_prompt->word_count > static_cast<std::size_t>(session.policy.word_limit)) {
                out.push_back(fmt::format("{}: refined prompt has {} words, limit is {}", where,
                                          r.refined_prompt->word_count, session.policy.word_limit));
            }
            if (!r.rule_analysis || !r.mismatch) {
                out.push_back(where +
                              ": refined prompt present without rule analysis and mismatch report");
            }
        }

        // Prompt chaining: each round consumes the previous round's refinement.
        if (i >= 1) {
            const auto& prev = session.rounds[i - 1];
            if (!prev.refined_prompt) {
                out.push_back(fmt::format("round {} exists but round {} has no refined prompt",
                                          i + 1, i));
            } else if (r.prompt != *prev.refined_prompt) {
                out.push_back(fmt::format("round {} prompt differs from round {} refined prompt",
                                          i + 1, i));
            }
        }
    }

    return out;
}

bool category_allowed_for_source(DatasetSource source, PhysicsCategory category) {
    if (category == PhysicsCategory::uncategorized) return true;
    switch (source) {
        case DatasetSource::videophy:
            return category == PhysicsCategory::solid_solid ||
                   category == PhysicsCategory::solid_fluid ||
                   category == PhysicsCategory::fluid_fluid;
        case DatasetSource::phygenbench:
            return category == PhysicsCategory::mechanics ||
                   category == PhysicsCategory::optics ||
                   category == PhysicsCategory::thermal;
        case DatasetSource::custom:
            return true;
    }
    return true;
}

int step_rank(StepKind step) noexcept {
    return static_cast<int>(step);
}

const char* to_string(GatingScoreSelector v) noexcept {
    switch (v) {
        case GatingScoreSelector::pc: return "pc";
        case GatingScoreSelector::sa: return "sa";
        case GatingScoreSelector::min_of_both: return "min_of_both";
    }
    return "min_of_both";
}

const char* to_string(StopReason v) noexcept {
    switch (v) {
        case StopReason::satisfied: return "satisfied";
        case StopReason::converged: return "converged";
        case StopReason::round_cap: return "round_cap";
        case StopReason::backend_failure: return "backend_failure";
    }
    return "backend_failure";
}

const char* to_string(DatasetSource v) noexcept {
    switch (v) {
        case DatasetSource::videophy: return "videophy";
        case DatasetSource::phygenbench: return "phygenbench";
        case DatasetSource::custom: return "custom";
    }
    return "custom";
}

const char* to_string(PhysicsCategory v) noexcept {
    switch (v) {
        case PhysicsCategory::solid_solid: return "solid_solid";
        case PhysicsCategory::solid_fluid: return "solid_fluid";
        case PhysicsCategory::fluid_fluid: return "fluid_fluid";
        case PhysicsCategory::mechanics: return "mechanics";
        case PhysicsCategory::optics: return "optics";
        case PhysicsCategory::thermal: return "thermal";
        case PhysicsCategory::uncategorized: return "uncategorized";
    }
    return "uncategorized";
}

const char* to_string(StepKind v) noexcept {
    switch (v) {
        case StepKind::gen_video: return "gen_video";
        case StepKind::caption: return "caption";
        case StepKind::step1: return "step1";
        case StepKind::step2: return "step2";
        case StepKind::evaluate: return "evaluate";
        case StepKind::step3: return "step3";
        case StepKind::stop: return "stop";
    }
    return "stop";
}

namespace {

[[noreturn]] void bad_enum(const char* what, std::string_view s) {
    throw Error(ErrorCode::invalid_value, fmt::format("unknown {}: '{}'", what, s));
}

}  // namespace

GatingScoreSelector parse_gating_score_selector(std::string_view s) {
    if (s == "pc") return GatingScoreSelector::pc;
    if (s == "sa") return GatingScoreSelector::sa;
    if (s == "min_of_both") return GatingScoreSelector::min_of_both;
    bad_enum("gating_score_selector", s);
}

StopReason parse_stop_reason(std::string_view s) {
    if (s == "satisfied") return StopReason::satisfied;
    if (s == "converged") return StopReason::converged;
    if (s == "round_cap") return StopReason::round_cap;
    if (s == "backend_failure") return StopReason::backend_failure;
    bad_enum("stop_reason", s);
}

DatasetSource parse_dataset_source(std::string_view s) {
    if (s == "videophy") return DatasetSource::videophy;
    if (s == "phygenbench") return DatasetSource::phygenbench;
    if (s == "custom") return DatasetSource::custom;
    bad_enum("dataset source", s);
}

PhysicsCategory parse_physics_category(std::string_view s) {
    if (s == "solid_solid") return PhysicsCategory::solid_solid;
    if (s == "solid_fluid") return PhysicsCategory::solid_fluid;
    if (s == "fluid_fluid") return PhysicsCategory::fluid_fluid;
    if (s == "mechanics") return PhysicsCategory::mechanics;
    if (s == "optics") return PhysicsCategory::optics;
    if (s == "thermal") return PhysicsCategory::thermal;
    if (s == "uncategorized") return PhysicsCategory::uncategorized;
    bad_enum("physics category", s);
}

StepKind parse_step_kind(std::string_view s) {
    if (s == "gen_video") return StepKind::gen_video;
    if (s == "caption") return StepKind::caption;
    if (s == "step1") return StepKind::step1;
    if (s == "step2") return StepKind::step2;
    if (s == "evaluate") return StepKind::evaluate;
    if (s == "step3") return StepKind::step3;
    if (s == "stop") return StepKind::stop;
    bad_enum("step", s);
}

}  // namespace t2vrefine
