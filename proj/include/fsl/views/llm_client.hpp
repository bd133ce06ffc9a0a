#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

namespace fsl::views {

struct LlmConfig {
    std::string endpoint; // e.g. http://127.0.0.1:8080 (path prefix allowed)
    int timeout_ms = 10000;
    int max_retries = 2;
    double temperature = 0.7;
    int max_tokens = 256;
    int backoff_ms = 250; // doubles after every failed attempt
    int parallelism = 4;
};

struct CompletionRequest {
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.7;
    std::uint64_t seed = 0;
};

class CompletionClient {
  public:
    virtual ~CompletionClient() = default;
    // nullopt after all retries failed.
    virtual std::optional<std::string> complete(const CompletionRequest& request) = 0;
};

// POST {endpoint}/generate, JSON in and out, with retry and exponential backoff.
class HttpCompletionClient final : public CompletionClient {
  public:
    explicit HttpCompletionClient(LlmConfig cfg);

    std::optional<std::string> complete(const CompletionRequest& request) override;

    [[nodiscard]] std::uint64_t attempts() const noexcept { return attempts_.load(); }

  private:
    LlmConfig cfg_;
    std::string host_;   // scheme://host[:port]
    std::string prefix_; // path prefix without trailing slash
    std::atomic<std::uint64_t> attempts_{0};
};

} // namespace fsl::views
