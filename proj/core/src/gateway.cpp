// SPDX-License-Identifier: Apache-2.0
#include "t2vrefine/gateway.hpp"

#include <algorithm>
#include <thread>

#include <fmt/format.h>

#include "t2vrefine/errors.hpp"

namespace t2vrefine {

const char* to_string(BackendKind v) noexcept {
    switch (v) {
        case BackendKind::http_chat: return "http_chat";
        case BackendKind::subprocess: return "subprocess";
        case BackendKind::mock: return "mock";
    }
    return "mock";
}

BackendKind parse_backend_kind(std::string_view s) {
    if (s == "http_chat") return BackendKind::http_chat;
    if (s == "subprocess") return BackendKind::subprocess;
    if (s == "mock") return BackendKind::mock;
    throw Error(ErrorCode::invalid_value, fmt::format("unknown backend kind: '{}'", s));
}

void BackendConfig::validate() const {
    if (!(timeout_s > 0.0)) throw Error(ErrorCode::invalid_value, "timeout_s must be > 0");
    if (max_retries < 0) throw Error(ErrorCode::invalid_value, "max_retries must be >= 0");
    if (!(retry_backoff_s >= 0.0)) {
        throw Error(ErrorCode::invalid_value, "retry_backoff_s must be >= 0");
    }
    if (rate_limit_per_s < 0.0) {
        throw Error(ErrorCode::invalid_value, "rate_limit_per_s must be >= 0");
    }
    if (kind != BackendKind::mock && endpoint.empty()) {
        throw Error(ErrorCode::invalid_value, "endpoint required for non-mock backends");
    }
}

void to_json(nlohmann::json& j, const BackendConfig& v) {
    j = nlohmann::json{{"kind", to_string(v.kind)},
                       {"endpoint", v.endpoint},
                       {"model", v.model},
                       {"auth_env_var", v.auth_env_var},
                       {"timeout_s", v.timeout_s},
                       {"max_retries", v.max_retries},
                       {"retry_backoff_s", v.retry_backoff_s},
                       {"rate_limit_per_s", v.rate_limit_per_s}};
}

void from_json(const nlohmann::json& j, BackendConfig& v) {
    v = BackendConfig{};
    if (j.contains("kind")) v.kind = parse_backend_kind(j.at("kind").get<std::string>());
    v.endpoint = j.value("endpoint", v.endpoint);
    v.model = j.value("model", v.model);
    v.auth_env_var = j.value("auth_env_var", v.auth_env_var);
    v.timeout_s = j.value("timeout_s", v.timeout_s);
    v.max_retries = j.value("max_retries", v.max_retries);
    v.retry_backoff_s = j.value("retry_backoff_s", v.retry_backoff_s);
    v.rate_limit_per_s = j.value("rate_limit_per_s", v.rate_limit_per_s);
    v.validate();
}

void to_json(nlohmann::json& j, const VideoParams& v) {
    j = nlohmann::json{{"duration_s", v.duration_s},
                       {"fps", v.fps},
                       {"width", v.width},
                       {"height", v.height}};
}

void from_json(const nlohmann::json& j, VideoParams& v) {
    v = VideoParams{};
    v.duration_s = j.value("duration_s", v.duration_s);
    v.fps = j.value("fps", v.fps);
    v.width = j.value("width", v.width);
    v.height = j.value("height", v.height);
}

int CallLog::enter(const std::string& op, int round, std::string detail) {
    std::lock_guard lock(mutex_);
    int active = ++in_flight_[op];
    max_concurrent_[op] = std::max(max_concurrent_[op], active);
    entries_.push_back(CallLogEntry{next_seq_, op, round, std::move(detail), active});
    return next_seq_++;
}

void CallLog::exit(const std::string& op) {
    std::lock_guard lock(mutex_);
    --in_flight_[op];
}

std::vector<CallLogEntry> CallLog::snapshot() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t CallLog::count(const std::string& op) const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (e.op == op) ++n;
    }
    return n;
}

int CallLog::max_concurrent(const std::string& op) const {
    std::lock_guard lock(mutex_);
    auto it = max_concurrent_.find(op);
    return it == max_concurrent_.end() ? 0 : it->second;
}

TokenBucket::TokenBucket(double rate_per_s, double burst)
    : rate_(rate_per_s), burst_(std::max(burst, 1.0)), tokens_(burst_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_s = (1.0 - tokens_) / rate_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        lock.lock();
    }
}

std::string with_retries(const BackendConfig& config, const std::function<std::string()>& fn,
                         int* attempts_out) {
    int attempts = 0;
    for (;;) {
        ++attempts;
        try {
            std::string result = fn();
            if (attempts_out) *attempts_out = attempts;
            return result;
        } catch (const Error& e) {
            bool transient = e.code() == ErrorCode::transport_error ||
                             e.code() == ErrorCode::timeout_error;
            if (!transient || attempts > config.max_retries) {
                if (attempts_out) *attempts_out = attempts;
                throw;
            }
            if (config.retry_backoff_s > 0.0) {
                double backoff = config.retry_backoff_s * static_cast<double>(1 << (attempts - 1));
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            }
        }
    }
}

}  // namespace t2vrefine
