#include "aigt/llmclient.hpp"

#include <cstdlib>
#include <thread>

#include "aigt/errors.hpp"

#include "httplib.h"
#include "json.hpp"

namespace aigt {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const size_t scheme_end = url.find("://");
    const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const size_t path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

HttpTransport make_default_transport(std::chrono::milliseconds timeout) {
    return [timeout](const std::string& url,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     const std::string& body) -> HttpResponse {
        const SplitUrl parts = split_url(url);
        httplib::Client client(parts.origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers header_list;
        std::string content_type = "application/json";
        for (const auto& [name, value] : headers) {
            if (name == "Content-Type") {
                content_type = value;
            } else {
                header_list.emplace(name, value);
            }
        }
        auto result = client.Post(parts.path, header_list, body, content_type);
        if (!result) throw TransportError(httplib::to_string(result.error()));
        return HttpResponse{result->status, result->body};
    };
}

// Never include the response body in errors: diagnostics must stay free of
// request echoes.
std::string parse_completion(const std::string& body) {
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw MalformedResponseError("response body is not valid JSON");
    }
    const auto choices = reply.find("choices");
    if (choices == reply.end() || !choices->is_array() || choices->empty()) {
        throw MalformedResponseError("response has no choices");
    }
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw MalformedResponseError("first choice has no message content");
    }
    return first["message"]["content"].get<std::string>();
}

}  // namespace

HttpLlmClient::HttpLlmClient(ClientConfig config)
    : HttpLlmClient(std::move(config), HttpTransport{}, Sleeper{}) {}

HttpLlmClient::HttpLlmClient(ClientConfig config, HttpTransport transport, Sleeper sleeper,
                             uint64_t jitter_seed)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_default_transport(config_.timeout)),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      jitter_(jitter_seed) {}

std::string HttpLlmClient::build_request_body(const ClientConfig& config,
                                              const std::string& prompt) {
    const nlohmann::json body = {
        {"model", config.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config.temperature},
    };
    return body.dump();
}

std::string HttpLlmClient::complete(const std::string& prompt) {
    {
        std::unique_lock<std::mutex> lock(mutex_);
        slot_available_.wait(lock, [this] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    struct SlotGuard {
        HttpLlmClient& client;
        ~SlotGuard() {
            {
                std::lock_guard<std::mutex> lock(client.mutex_);
                --client.in_flight_;
            }
            client.slot_available_.notify_one();
        }
    } guard{*this};

    // The key travels only in the Authorization header, never in errors or
    // serialized state.
    std::vector<std::pair<std::string, std::string>> headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }

    const std::string url = config_.base_url + "/chat/completions";
    const std::string body = build_request_body(config_, prompt);

    int last_status = 0;
    std::string last_reason;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto base = std::chrono::milliseconds(1000) * (1LL << (attempt - 1));
            std::chrono::milliseconds delay;
            {
                std::lock_guard<std::mutex> lock(mutex_);
                delay = base + std::chrono::milliseconds(static_cast<int64_t>(
                                   jitter_.below(static_cast<uint64_t>(base.count() / 2 + 1))));
            }
            sleeper_(delay);
        }

        HttpResponse response;
        try {
            response = transport_(url, headers, body);
        } catch (const TransportError& error) {
            last_status = -1;
            last_reason = error.what();
            continue;
        }

        if (response.status == 401 || response.status == 403) {
            throw AuthError("authentication rejected (status " + std::to_string(response.status) +
                            ")");
        }
        if (response.status == 429 || response.status >= 500) {
            last_status = response.status;
            last_reason = "status " + std::to_string(response.status);
            continue;
        }
        if (response.status != 200) {
            throw ClientError("unexpected status " + std::to_string(response.status));
        }
        return parse_completion(response.body);
    }

    if (last_status == 429) {
        throw RateLimitedError("still rate limited after " + std::to_string(config_.max_retries) +
                               " retries");
    }
    if (last_status == -1) {
        throw TransportError("transport failed after " + std::to_string(config_.max_retries) +
                             " retries: " + last_reason);
    }
    throw ClientError("server error after " + std::to_string(config_.max_retries) +
                      " retries: " + last_reason);
}

MockLlmClient::MockLlmClient(std::vector<MockRule> rules, MockDefault fallback,
                             std::string fixed_reply)
    : rules_(std::move(rules)), fallback_(fallback), fixed_reply_(std::move(fixed_reply)) {}

std::string MockLlmClient::extract_quoted_token(const std::string& prompt) {
    const size_t open = prompt.find('\'');
    if (open == std::string::npos) return "";
    const size_t close = prompt.find('\'', open + 1);
    if (close == std::string::npos) return "";
    return prompt.substr(open + 1, close - open - 1);
}

std::string MockLlmClient::complete(const std::string& prompt) {
    const std::string token = extract_quoted_token(prompt);
    for (const MockRule& rule : rules_) {
        if (rule.pattern == token) return rule.replacement;
    }
    if (fallback_ == MockDefault::Fixed) return fixed_reply_;
    return token.empty() ? prompt : token;
}

}  // namespace aigt
