#include "dforge/provider.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <thread>

#include "dforge/errors.hpp"
#include "dforge/text.hpp"

namespace dforge {

using nlohmann::json;

std::string_view to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

void validate(const ChatRequest& request) {
    if (request.model.empty()) throw ValidationError("model", "model is empty");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
        throw ValidationError("temperature", "must lie in [0, 2]");
    if (request.messages.empty()) throw ValidationError("messages", "no messages");
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        const auto& m = request.messages[i];
        if (m.role == Role::system && i != 0)
            throw ValidationError("messages[" + std::to_string(i) + "]",
                                  "system message must come first");
        if (m.role != Role::system && m.content.empty())
            throw ValidationError("messages[" + std::to_string(i) + "].content", "empty content");
    }
}

json to_wire(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return json{{"model", request.model},
                {"temperature", request.temperature},
                {"messages", std::move(messages)}};
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    const double scale = std::pow(factor, std::max(0, attempt - 1));
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(std::llround(static_cast<double>(initial_delay.count()) * scale)));
}

ChatResponse parse_chat_completion(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
    }
    ChatResponse r;
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw MalformedResponseError("message content is not a string");
        r.text = content.get<std::string>();
        const auto& usage = j.at("usage");
        r.usage.prompt_tokens = usage.at("prompt_tokens").get<std::int64_t>();
        r.usage.completion_tokens = usage.at("completion_tokens").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw MalformedResponseError(std::string("unexpected response shape: ") + e.what());
    }
    validate(r.usage);
    return r;
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& sem_;
};

bool transient(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

OpenAIProvider::OpenAIProvider(HttpProviderOptions options)
    : options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_concurrency, 1, 1024))) {
    if (!options_.sleep)
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
}

const Endpoint& OpenAIProvider::endpoint_for(const std::string& model) const {
    auto it = options_.model_endpoints.find(model);
    return it != options_.model_endpoints.end() ? it->second : options_.endpoint;
}

ChatResponse OpenAIProvider::complete(const ChatRequest& request) {
    validate(request);
    const auto& endpoint = endpoint_for(request.model);
    if (endpoint.api_key.empty())
        throw AuthError("no API key configured for model " + request.model);
    const auto url = split_url(endpoint.base_url);
    const auto body = to_wire(request).dump();
    const httplib::Headers headers{{"Authorization", "Bearer " + endpoint.api_key}};

    std::string last_failure;
    for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
        httplib::Result res{nullptr, httplib::Error::Unknown};
        {
            SlotGuard slot(slots_);
            httplib::Client client(url.origin);
            client.set_connection_timeout(options_.timeout);
            client.set_read_timeout(options_.timeout);
            client.set_write_timeout(options_.timeout);
            res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
        }
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            return parse_chat_completion(res->body);
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url);
        } else if (transient(res->status)) {
            last_failure = "HTTP " + std::to_string(res->status);
        } else {
            throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        if (attempt < options_.retry.max_attempts) {
            auto delay = options_.retry.delay_after(attempt);
            spdlog::warn("{} on attempt {}/{} for {}; retrying in {} ms", last_failure, attempt,
                         options_.retry.max_attempts, request.model, delay.count());
            options_.sleep(delay);
        }
    }
    throw RetriesExhaustedError("giving up after " + std::to_string(options_.retry.max_attempts) +
                                " attempts: " + last_failure);
}

MockProvider::MockProvider(std::map<std::string, std::vector<ScriptedReply>> replies, bool cycle)
    : replies_(std::move(replies)), cycle_(cycle) {}

std::unique_ptr<MockProvider> MockProvider::from_json(const json& scenario) {
    std::map<std::string, std::vector<ScriptedReply>> replies;
    try {
        for (const auto& [key, list] : scenario.at("replies").items()) {
            auto& out = replies[key];
            for (const auto& item : list) {
                ScriptedReply r;
                if (item.is_string()) {
                    r.text = item.get<std::string>();
                } else {
                    r.text = item.value("text", std::string{});
                    r.error = item.value("error", std::string{});
                    if (item.contains("usage")) r.usage = item.at("usage").get<UsageRecord>();
                }
                out.push_back(std::move(r));
            }
        }
        return std::make_unique<MockProvider>(std::move(replies), scenario.value("cycle", false));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed mock scenario: ") + e.what());
    }
}

ChatResponse MockProvider::complete(const ChatRequest& request) {
    validate(request);
    std::lock_guard lock(mutex_);
    log_.push_back(request);

    auto key = request.tag + "@" + request.model;
    auto it = replies_.find(key);
    if (it == replies_.end()) {
        key = request.tag;
        it = replies_.find(key);
    }
    if (it == replies_.end() || it->second.empty())
        throw ScriptUnderrunError("script underrun: no replies scripted for '" + request.tag +
                                  "' (model " + request.model + ")");
    auto& index = calls_[key];
    const auto& list = it->second;
    if (index >= list.size() && !cycle_)
        throw ScriptUnderrunError("script underrun: call " + std::to_string(index + 1) + " on '" +
                                  key + "' but only " + std::to_string(list.size()) +
                                  " replies are scripted");
    const auto& reply = list[index % list.size()];
    ++index;
    if (!reply.error.empty()) throw ProviderError(reply.error);

    ChatResponse response{reply.text, {}};
    if (reply.usage) {
        response.usage = *reply.usage;
    } else {
        std::size_t prompt_words = 0;
        for (const auto& m : request.messages) prompt_words += text::word_count(m.content);
        response.usage.prompt_tokens = static_cast<std::int64_t>(prompt_words);
        response.usage.completion_tokens = static_cast<std::int64_t>(text::word_count(reply.text));
    }
    return response;
}

std::vector<ChatRequest> MockProvider::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

void MockProvider::reset() {
    std::lock_guard lock(mutex_);
    calls_.clear();
    log_.clear();
}

std::unique_ptr<MockProvider> script_mock(const std::filesystem::path& scenario_file) {
    std::ifstream in(scenario_file, std::ios::binary);
    if (!in) throw ConfigError("cannot read mock scenario " + scenario_file.string());
    json scenario;
    try {
        scenario = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("mock scenario " + scenario_file.string() + " is not JSON: " + e.what());
    }
    return MockProvider::from_json(scenario);
}

}  // namespace dforge
