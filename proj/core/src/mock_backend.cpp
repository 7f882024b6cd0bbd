// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/mock_backend.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "t2vrefine/errors.hpp"

namespace t2vrefine {

namespace {

double clamp01(double v) {
    return std::clamp(v, 0.0, 1.0);
}

ErrorCode default_error_for(const std::string& op) {
    if (op == "generate_video") return ErrorCode::generation_error;
    if (op == "caption") return ErrorCode::caption_error;
    if (op == "evaluate") return ErrorCode::evaluation_error;
    return ErrorCode::transport_error;
}

ErrorCode error_code_by_name(const std::string& name, const std::string& op) {
    if (name.empty()) return default_error_for(op);
    for (ErrorCode code : {ErrorCode::transport_error, ErrorCode::auth_error,
                           ErrorCode::timeout_error, ErrorCode::generation_error,
                           ErrorCode::caption_error, ErrorCode::missing_video,
                           ErrorCode::evaluation_error}) {
        if (name == to_string(code)) return code;
    }
    return default_error_for(op);
}

// Throws when the script says this (op, round) fails.
void maybe_fail(const MockScript& script, const std::string& op, int round) {
    auto op_it = script.failures.find(op);
    if (op_it == script.failures.end()) return;
    auto round_it = op_it->second.find(round);
    if (round_it == op_it->second.end()) return;
    throw Error(error_code_by_name(round_it->second, op),
                fmt::format("mock scripted failure: {} round {}", op, round));
}

struct LogScope {
    CallLog& log;
    std::string op;
    LogScope(CallLog& log, std::string op, int round, std::string detail) : log(log), op(op) {
        log.enter(this->op, round, std::move(detail));
    }
    ~LogScope() { log.exit(op); }
};

class MockReasoner : public ReasonerBackend {
public:
    MockReasoner(std::shared_ptr<MockState> state, std::shared_ptr<CallLog> log)
        : state_(std::move(state)), log_(std::move(log)) {}

    std::string reason(const ReasonerRequest& request) override {
        std::string op = std::string("reason_") + step_suffix(request.expected_schema);
        int round = state_->next_round(op);
        LogScope scope(*log_, op, round, request.system_part + "\n" + request.user_part);
        maybe_fail(state_->script, op, round);

        auto it = state_->script.responses.find({request.expected_schema, round});
        if (it != state_->script.responses.end()) return it->second;
        return fallback(request.expected_schema, round);
    }

private:
    static const char* step_suffix(SubproblemStep step) {
        switch (step) {
            case SubproblemStep::rule_extraction: return "step1";
            case SubproblemStep::mismatch_analysis: return "step2";
            case SubproblemStep::stepback_refine: return "step3";
        }
        return "step1";
    }

    static std::string fallback(SubproblemStep step, int round) {
        switch (step) {
            case SubproblemStep::rule_extraction:
                return R"({"main_objects": ["main subject"], "physical_rules": )"
                       R"(["Objects keep consistent shape and obey gravity throughout the scene."]})";
            case SubproblemStep::mismatch_analysis:
                return R"({"mismatches": [{"aspect": "detail", "prompt_said": )"
                       R"("the full requested scene", "video_showed": "a partial scene"}]})";
            case SubproblemStep::stepback_refine:
                return fmt::format(
                    R"({{"refined_prompt": "mock refined prompt round {} keeping the scene physically consistent"}})",
                    round);
        }
        return "{}";
    }

    std::shared_ptr<MockState> state_;
    std::shared_ptr<CallLog> log_;
};

class MockVideoGen : public VideoGenBackend {
public:
    MockVideoGen(std::shared_ptr<MockState> state, std::shared_ptr<CallLog> log,
                 std::filesystem::path fallback_dir, VideoParams defaults)
        : state_(std::move(state)),
          log_(std::move(log)),
          fallback_dir_(std::move(fallback_dir)),
          defaults_(std::move(defaults)) {}

    VideoRef generate_video(const PromptText& prompt, const VideoParams& params) override {
        int round = state_->next_round("generate_video");
        LogScope scope(*log_, "generate_video", round, prompt.text);
        maybe_fail(state_->script, "generate_video", round);
        if (state_->script.video_latency_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(state_->script.video_latency_ms));
        }

        std::filesystem::path dir =
            params.output_hint.empty() ? fallback_dir_ : std::filesystem::path(params.output_hint);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        auto path = dir / fmt::format("video_{:04d}.mp4", round);
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorCode::generation_error, "cannot write placeholder " + path.string());
        }
        out << "placeholder video for prompt: " << prompt.text << "\n";
        out.close();

        VideoParams p = params;
        if (p.duration_s <= 0) p = defaults_;
        return VideoRef::make(path.string(), p.duration_s, p.fps, p.width, p.height);
    }

private:
    std::shared_ptr<MockState> state_;
    std::shared_ptr<CallLog> log_;
    std::filesystem::path fallback_dir_;
    VideoParams defaults_;
};

class MockCaptioner : public CaptionBackend {
public:
    MockCaptioner(std::shared_ptr<MockState> state, std::shared_ptr<CallLog> log)
        : state_(std::move(state)), log_(std::move(log)) {}

    std::string caption(const VideoRef& video) override {
        int round = state_->next_round("caption");
        LogScope scope(*log_, "caption", round, video.locator);
        maybe_fail(state_->script, "caption", round);

        // Local paths must exist; scheme-prefixed locators pass through.
        bool is_uri = video.locator.find("://") != std::string::npos;
        if (!is_uri && !std::filesystem::exists(video.locator)) {
            throw Error(ErrorCode::missing_video, "no such video file: " + video.locator);
        }

        const auto& script = state_->script;
        auto it = script.captions_by_locator.find(video.locator);
        if (it != script.captions_by_locator.end()) return it->second;
        if (round >= 1 && round <= static_cast<int>(script.captions.size())) {
            return script.captions[static_cast<std::size_t>(round) - 1];
        }
        return fmt::format("A {}x{} video showing the requested scene in partial detail.",
                           video.width, video.height);
    }

private:
    std::shared_ptr<MockState> state_;
    std::shared_ptr<CallLog> log_;
};

class MockEvaluator : public EvaluatorBackend {
public:
    MockEvaluator(std::shared_ptr<MockState> state, std::shared_ptr<CallLog> log)
        : state_(std::move(state)), log_(std::move(log)) {}

    ScorePair evaluate(const VideoRef& video, const PromptText& prompt) override {
        int round = state_->next_round("evaluate");
        LogScope scope(*log_, "evaluate", round, prompt.text);
        maybe_fail(state_->script, "evaluate", round);
        (void)video;

        const auto& rule = state_->script.evaluator;
        if (!rule.scripted.empty()) {
            auto idx = std::min<std::size_t>(static_cast<std::size_t>(round) - 1,
                                             rule.scripted.size() - 1);
            return rule.scripted[idx];
        }
        double pc = rule.base_pc;
        double sa = rule.base_sa;
        for (const auto& kw : rule.keywords) {
            if (prompt.text.find(kw.keyword) != std::string::npos) {
                pc += kw.pc_bonus;
                sa += kw.sa_bonus;
            }
        }
        return ScorePair{clamp01(pc), clamp01(sa)};
    }

private:
    std::shared_ptr<MockState> state_;
    std::shared_ptr<CallLog> log_;
};

}  // namespace

MockScript MockScript::from_json(const nlohmann::json& j) {
    MockScript script;
    if (j.contains("responses")) {
        for (const auto& r : j.at("responses")) {
            auto step = parse_subproblem_step(r.at("step").get<std::string>());
            int round = r.at("round").get<int>();
            script.responses[{step, round}] = r.at("response").get<std::string>();
        }
    }
    if (j.contains("captions")) j.at("captions").get_to(script.captions);
    if (j.contains("captions_by_locator")) {
        j.at("captions_by_locator").get_to(script.captions_by_locator);
    }
    if (j.contains("evaluator")) {
        const auto& e = j.at("evaluator");
        script.evaluator.base_pc = clamp01(e.value("base_pc", script.evaluator.base_pc));
        script.evaluator.base_sa = clamp01(e.value("base_sa", script.evaluator.base_sa));
        if (e.contains("keywords")) {
            for (const auto& k : e.at("keywords")) {
                script.evaluator.keywords.push_back(KeywordRule{
                    k.at("keyword").get<std::string>(), k.value("pc_bonus", 0.0),
                    k.value("sa_bonus", 0.0)});
            }
        }
        if (e.contains("scripted")) {
            for (const auto& s : e.at("scripted")) {
                script.evaluator.scripted.push_back(ScorePair{
                    clamp01(s.at("pc").get<double>()), clamp01(s.at("sa").get<double>())});
            }
        }
    }
    script.video_latency_ms = j.value("video_latency_ms", 0);
    if (j.contains("failures")) {
        for (const auto& f : j.at("failures")) {
            script.failures[f.at("op").get<std::string>()][f.at("round").get<int>()] =
                f.value("error", std::string{});
        }
    }
    return script;
}

MockScript MockScript::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::config_error, "cannot open mock script: " + path.string());
    }
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::config_error, "mock script is not valid JSON: " + path.string());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config_error,
                    fmt::format("mock script {}: {}", path.string(), e.what()));
    }
}

MockBackends make_mock_backends(MockScript script, std::filesystem::path fallback_dir,
                                VideoParams default_params) {
    MockBackends m;
    m.state = std::make_shared<MockState>();
    m.state->script = std::move(script);
    m.log = std::make_shared<CallLog>();
    m.gateways.reasoner = std::make_shared<MockReasoner>(m.state, m.log);
    m.gateways.video = std::make_shared<MockVideoGen>(m.state, m.log, std::move(fallback_dir),
                                                      std::move(default_params));
    m.gateways.captioner = std::make_shared<MockCaptioner>(m.state, m.log);
    m.gateways.evaluator = std::make_shared<MockEvaluator>(m.state, m.log);
    return m;
}

}  // namespace t2vrefine
