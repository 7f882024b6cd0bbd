// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "t2vrefine/gateway.hpp"

namespace t2vrefine {

struct KeywordRule {
    std::string keyword;
    double pc_bonus = 0.0;
    double sa_bonus = 0.0;

    bool operator==(const KeywordRule&) const = default;
};

// Declarative mock scoring: base scores plus a bonus per keyword found in the
// prompt, clamped to [0,1]. When `scripted` is non-empty it takes precedence:
// call k returns scripted[k-1], repeating the last entry once exhausted.
struct MockEvaluatorRule {
    double base_pc = 0.2;
    double base_sa = 0.2;
    std::vector<KeywordRule> keywords;
    std::vector<ScorePair> scripted;

    bool operator==(const MockEvaluatorRule&) const = default;
};

// Scripted behavior for all four mock backends. Rounds are derived from
// per-operation call counters, so the same script and call sequence always
// produce the same transcript. See docs/formats.md for the file schema.
struct MockScript {
    std::map<std::pair<SubproblemStep, int>, std::string> responses;  // (step, round) -> raw
    std::vector<std::string> captions;                                // per round, 1-based
    std::map<std::string, std::string> captions_by_locator;
    MockEvaluatorRule evaluator;
    int video_latency_ms = 0;
    // op -> round -> error code name; ops: reason_step1/2/3, generate_video,
    // caption, evaluate. Empty code means the op's default error.
    std::map<std::string, std::map<int, std::string>> failures;

    static MockScript load_file(const std::filesystem::path& path);
    static MockScript from_json(const nlohmann::json& j);
};

// Shared call counters for one mock backend set.
struct MockState {
    MockScript script;
    std::mutex mutex;
    std::map<std::string, int> calls;  // per-op counters

    int next_round(const std::string& op) {
        std::lock_guard lock(mutex);
        return ++calls[op];
    }
};

struct MockBackends {
    std::shared_ptr<MockState> state;
    std::shared_ptr<CallLog> log;
    Gateways gateways;
};

// Builds the four deterministic mock adapters over one script. fallback_dir
// is where placeholder video files go when no output_hint is passed.
MockBackends make_mock_backends(MockScript script, std::filesystem::path fallback_dir,
                                VideoParams default_params = {});

}  // namespace t2vrefine
