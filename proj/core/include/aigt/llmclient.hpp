#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "aigt/rng.hpp"

namespace aigt {

struct ClientConfig {
    std::string base_url;
    std::string api_key_env = "AIGT_API_KEY";
    std::string model_name = "gpt-4o-mini";
    double temperature = 0.0;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    int max_in_flight = 4;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;

    // Sends one user message, returns the first choice's content verbatim.
    virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Injectable for tests; the default performs a real POST. Implementations
// throw TransportError on connection failure or timeout.
using HttpTransport = std::function<HttpResponse(
    const std::string& url,
    const std::vector<std::pair<std::string, std::string>>& headers,
    const std::string& body)>;

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Chat-completion client for an OpenAI-compatible endpoint. Retries 429/5xx
// and transport timeouts with exponential backoff (base 1s, factor 2,
// jitter); 401/403 raise AuthError without retry. At most
// config.max_in_flight requests run concurrently.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(ClientConfig config);
    HttpLlmClient(ClientConfig config, HttpTransport transport, Sleeper sleeper,
                  uint64_t jitter_seed = 0);

    std::string complete(const std::string& prompt) override;

    static std::string build_request_body(const ClientConfig& config, const std::string& prompt);

private:
    ClientConfig config_;
    HttpTransport transport_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::condition_variable slot_available_;
    int in_flight_ = 0;
    Rng jitter_;
};

struct MockRule {
    std::string pattern;  // token the rule matches
    std::string replacement;
};

enum class MockDefault { EchoToken, Fixed };

// Offline stand-in: extracts the quoted token from the replacement prompt
// shape and answers from the rule table. No network I/O, fully deterministic.
class MockLlmClient : public LlmClient {
public:
    explicit MockLlmClient(std::vector<MockRule> rules,
                           MockDefault fallback = MockDefault::EchoToken,
                           std::string fixed_reply = "");

    std::string complete(const std::string& prompt) override;

    // First '...'-quoted span in the prompt; empty when none exists.
    static std::string extract_quoted_token(const std::string& prompt);

private:
    std::vector<MockRule> rules_;
    MockDefault fallback_;
    std::string fixed_reply_;
};

}  // namespace aigt
