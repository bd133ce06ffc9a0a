#include "fsl/views/llm_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"

namespace fsl::views {

HttpCompletionClient::HttpCompletionClient(LlmConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos || cfg_.endpoint.compare(0, scheme_end, "http") != 0) {
        throw ConfigError("llm endpoint must be an http:// URL, got '" + cfg_.endpoint + "'");
    }
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    host_ = cfg_.endpoint.substr(0, path_start);
    if (path_start != std::string::npos) {
        prefix_ = cfg_.endpoint.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') {
            prefix_.pop_back();
        }
    }
    if (cfg_.max_retries < 0 || cfg_.timeout_ms <= 0 || cfg_.backoff_ms < 0) {
        throw ConfigError("llm timeout must be > 0 and retries/backoff >= 0");
    }
}

std::optional<std::string> HttpCompletionClient::complete(const CompletionRequest& request) {
    const nlohmann::json body = {
        {"prompt", request.prompt},
        {"max_tokens", request.max_tokens},
        {"temperature", request.temperature},
        // Kept within 31 bits so any JSON consumer can hold it as an int.
        {"seed", static_cast<std::int64_t>(request.seed & 0x7fffffffULL)},
    };
    const std::string payload = body.dump();
    const std::string path = prefix_ + "/generate";

    httplib::Client client(host_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    int delay_ms = cfg_.backoff_ms;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
        ++attempts_;
        const auto res = client.Post(path, payload, "application/json");
        if (!res) {
            log::debug("llm request failed: " + httplib::to_string(res.error()));
            continue;
        }
        if (res->status != 200) {
            log::debug("llm request returned HTTP " + std::to_string(res->status));
            continue;
        }
        const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("text") ||
            !parsed["text"].is_string()) {
            log::debug("llm response is not a {\"text\": string} object");
            continue;
        }
        return parsed["text"].get<std::string>();
    }
    return std::nullopt;
}

} // namespace fsl::views
