#pragma once

// Chat-completion backends: an OpenAI-compatible HTTP client and a scripted
// mock for offline runs.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dforge/model.hpp"

namespace dforge {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    double temperature = 1.0;
    std::vector<ChatMessage> messages;
    // Caller role ("interviewer", "candidate", "single", "judge", "summarize").
    // Never sent over the wire; the mock keys its script on it.
    std::string tag;

    bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
    std::string text;
    UsageRecord usage;
};

// Throws ValidationError on an out-of-range temperature, a misplaced system
// message, or empty user/assistant content.
void validate(const ChatRequest& request);

// The OpenAI chat-completions request body for `request`.
nlohmann::json to_wire(const ChatRequest& request);

class Provider {
public:
    virtual ~Provider() = default;

    virtual ChatResponse complete(const ChatRequest& request) = 0;

    // True when replies depend on call order (the scripted mock); callers
    // must then issue requests one at a time in a fixed order.
    virtual bool requires_sequential_calls() const { return false; }
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_delay{1000};
    double factor = 2.0;

    // Delay slept after failed attempt `attempt` (1-based).
    std::chrono::milliseconds delay_after(int attempt) const;
};

struct Endpoint {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string api_key;
};

struct HttpProviderOptions {
    Endpoint endpoint;
    std::map<std::string, Endpoint> model_endpoints;  // per-model overrides
    RetryPolicy retry;
    std::size_t max_concurrency = 4;
    std::chrono::seconds timeout{120};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

// POSTs to {base_url}/chat/completions. 429 and 5xx (and transport errors)
// are retried with exponential backoff; 401/403 fail immediately.
class OpenAIProvider final : public Provider {
public:
    explicit OpenAIProvider(HttpProviderOptions options);

    ChatResponse complete(const ChatRequest& request) override;

    const Endpoint& endpoint_for(const std::string& model) const;

private:
    HttpProviderOptions options_;
    std::counting_semaphore<1024> slots_;
};

ChatResponse parse_chat_completion(std::string_view body);

struct ScriptedReply {
    std::string text;
    std::optional<UsageRecord> usage;
    std::string error;  // non-empty: the call fails with this message
};

// Replays a JSON scenario:
//   {"cycle": false,
//    "replies": {"interviewer": ["Good morning", ...],
//                "judge@judge-b": [{"text": "...", "usage": {...}}, ...]}}
// A request matches "<tag>@<model>" first, then "<tag>". The i-th call on a
// key returns its i-th reply. Running past the end throws ScriptUnderrunError
// unless "cycle" is set. Replies without usage get word counts of the request
// and the reply.
class MockProvider final : public Provider {
public:
    explicit MockProvider(std::map<std::string, std::vector<ScriptedReply>> replies,
                          bool cycle = false);

    static std::unique_ptr<MockProvider> from_json(const nlohmann::json& scenario);

    ChatResponse complete(const ChatRequest& request) override;
    bool requires_sequential_calls() const override { return true; }

    std::vector<ChatRequest> requests() const;
    void reset();

private:
    std::map<std::string, std::vector<ScriptedReply>> replies_;
    bool cycle_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> calls_;
    std::vector<ChatRequest> log_;
};

std::unique_ptr<MockProvider> script_mock(const std::filesystem::path& scenario_file);

}  // namespace dforge
