// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2vrefine/domain.hpp"
#include "t2vrefine/prompt_kit.hpp"

namespace t2vrefine {

enum class BackendKind { http_chat, subprocess, mock };

const char* to_string(BackendKind v) noexcept;
BackendKind parse_backend_kind(std::string_view s);

// Connection settings for one model backend. Credentials are never stored
// here, only the name of the environment variable holding them.
struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;        // URI (http_chat) or command line (subprocess)
    std::string model;           // model name sent on http_chat requests
    std::string auth_env_var;    // env var holding the bearer credential
    double timeout_s = 30.0;
    int max_retries = 2;
    double retry_backoff_s = 0.5;
    double rate_limit_per_s = 0.0;  // token bucket; 0 disables

    void validate() const;

    bool operator==(const BackendConfig&) const = default;
};

void to_json(nlohmann::json& j, const BackendConfig& v);
void from_json(const nlohmann::json& j, BackendConfig& v);

// Generation parameters passed to the video backend. output_hint, when set,
// names a directory the backend may write into (the session's videos/ dir);
// backends with their own storage ignore it.
struct VideoParams {
    double duration_s = 6.0;
    int fps = 10;
    int width = 720;
    int height = 480;
    std::string output_hint;

    bool operator==(const VideoParams&) const = default;
};

void to_json(nlohmann::json& j, const VideoParams& v);
void from_json(const nlohmann::json& j, VideoParams& v);

struct ReasonerBackend {
    virtual ~ReasonerBackend() = default;
    virtual std::string reason(const ReasonerRequest& request) = 0;
};

struct VideoGenBackend {
    virtual ~VideoGenBackend() = default;
    virtual VideoRef generate_video(const PromptText& prompt, const VideoParams& params) = 0;
};

struct CaptionBackend {
    virtual ~CaptionBackend() = default;
    virtual std::string caption(const VideoRef& video) = 0;
};

struct EvaluatorBackend {
    virtual ~EvaluatorBackend() = default;
    virtual ScorePair evaluate(const VideoRef& video, const PromptText& prompt) = 0;
};

struct Gateways {
    std::shared_ptr<ReasonerBackend> reasoner;
    std::shared_ptr<VideoGenBackend> video;
    std::shared_ptr<CaptionBackend> captioner;
    std::shared_ptr<EvaluatorBackend> evaluator;
};

// Sequence-numbered record of backend calls. Mock and instrumented backends
// append to it; tests read the transcript back. Entries carry no wall-clock
// data, so identical call sequences produce identical transcripts.
struct CallLogEntry {
    int seq = 0;
    std::string op;        // reason_step1, reason_step2, reason_step3, generate_video, ...
    int round = 0;         // derived round number (per-op call counter)
    std::string detail;    // request text or summary
    int concurrent = 1;    // calls of this op in flight when this one entered
};

class CallLog {
public:
    int enter(const std::string& op, int round, std::string detail);
    void exit(const std::string& op);

    std::vector<CallLogEntry> snapshot() const;
    std::size_t count(const std::string& op) const;
    int max_concurrent(const std::string& op) const;

private:
    mutable std::mutex mutex_;
    std::vector<CallLogEntry> entries_;
    std::map<std::string, int> in_flight_;
    std::map<std::string, int> max_concurrent_;
    int next_seq_ = 1;
};

// Shared per-backend rate limiter honored across concurrent callers.
class TokenBucket {
public:
    // rate <= 0 disables limiting; burst is the bucket capacity.
    explicit TokenBucket(double rate_per_s, double burst = 1.0);

    void acquire();

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

// Runs fn, retrying on transport/timeout errors with exponential backoff.
// Attempts (1 + retries used) are reported through attempts_out when given.
std::string with_retries(const BackendConfig& config, const std::function<std::string()>& fn,
                         int* attempts_out = nullptr);

}  // namespace t2vrefine
