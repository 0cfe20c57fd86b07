#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fptox/error.hpp"
#include "fptox/llm.hpp"

namespace fptox::llm {

// Chat-completions client over plain HTTP. The bearer token is read from the
// environment variable named in the config; it is never written to disk or
// echoed in errors.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(LlmEndpointConfig config) : config_(std::move(config)) {
        if (const char* tok = std::getenv(config_.auth_env.c_str())) token_ = tok;
    }

    const LlmEndpointConfig& config() const { return config_; }

    std::string complete(const std::string& user_content) override {
        const nlohmann::json body = build_request_body(config_, user_content);
        const std::string payload = body.dump();
        std::string last_error;
        for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
            }
            httplib::Client cli(config_.base_url);
            cli.set_connection_timeout(static_cast<time_t>(config_.timeout_sec), 0);
            cli.set_read_timeout(static_cast<time_t>(config_.timeout_sec), 0);
            cli.set_write_timeout(static_cast<time_t>(config_.timeout_sec), 0);
            httplib::Headers headers;
            if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
            auto res = cli.Post(config_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error: HTTP " + std::to_string(res->status);
                continue;  // retryable
            }
            if (res->status != 200) {
                throw Error("endpoint rejected request: HTTP " + std::to_string(res->status));
            }
            nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) throw Error("endpoint response is not valid JSON");
            return extract_content(parsed, config_.content_path);
        }
        throw Error("endpoint unreachable after " + std::to_string(config_.max_retries + 1) +
                    " attempts (" + last_error + ")");
    }

private:
    LlmEndpointConfig config_;
    std::string token_;
};

}  // namespace fptox::llm
