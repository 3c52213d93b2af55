#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "dforge/errors.hpp"
#include "dforge/provider.hpp"

using namespace dforge;
using nlohmann::json;

namespace {

const char* kOkBody = R"({"choices":[{"message":{"role":"assistant","content":"hello"}}],
                          "usage":{"prompt_tokens":12,"completion_tokens":3,"total_tokens":15}})";

// A loopback chat-completions server whose handler is supplied per test.
class LocalServer {
public:
    explicit LocalServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ChatRequest hello_request() {
    ChatRequest r;
    r.model = "test-model";
    r.temperature = 0.5;
    r.messages = {{Role::system, "sys"}, {Role::user, "hi"}};
    r.tag = "judge";
    return r;
}

HttpProviderOptions options_for(const LocalServer& server, std::vector<std::chrono::milliseconds>& slept) {
    HttpProviderOptions o;
    o.endpoint = {server.base_url(), "secret"};
    o.retry = {5, std::chrono::milliseconds(1000), 2.0};
    o.timeout = std::chrono::seconds(5);
    o.sleep = [&slept](std::chrono::milliseconds d) { slept.push_back(d); };
    return o;
}

}  // namespace

TEST_CASE("request validation") {
    auto r = hello_request();
    CHECK_NOTHROW(validate(r));
    r.temperature = 2.5;
    CHECK_THROWS_AS(validate(r), ValidationError);
    r = hello_request();
    r.messages = {{Role::user, "hi"}, {Role::system, "late"}};
    CHECK_THROWS_AS(validate(r), ValidationError);
    r = hello_request();
    r.messages.push_back({Role::assistant, ""});
    CHECK_THROWS_AS(validate(r), ValidationError);
}

TEST_CASE("wire format omits the tag") {
    const auto wire = to_wire(hello_request());
    CHECK(wire.at("model") == "test-model");
    CHECK(wire.at("temperature") == 0.5);
    CHECK(wire.at("messages").size() == 2);
    CHECK(wire.at("messages")[0].at("role") == "system");
    CHECK_FALSE(wire.contains("tag"));
}

TEST_CASE("backoff schedule") {
    RetryPolicy p{5, std::chrono::milliseconds(1000), 2.0};
    CHECK(p.delay_after(1).count() == 1000);
    CHECK(p.delay_after(2).count() == 2000);
    CHECK(p.delay_after(4).count() == 8000);
}

TEST_CASE("completion parsing") {
    const auto r = parse_chat_completion(kOkBody);
    CHECK(r.text == "hello");
    CHECK(r.usage == UsageRecord{12, 3});
    CHECK_THROWS_AS(parse_chat_completion("{}"), MalformedResponseError);
    CHECK_THROWS_AS(parse_chat_completion("not json"), MalformedResponseError);
    CHECK_THROWS_AS(parse_chat_completion(R"({"choices":[]})"), MalformedResponseError);
}

TEST_CASE("429 is retried with exponential backoff") {
    std::atomic<int> calls{0};
    json seen;
    std::string auth;
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        if (++calls <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(kOkBody, "application/json");
    });
    std::vector<std::chrono::milliseconds> slept;
    OpenAIProvider provider(options_for(server, slept));
    const auto r = provider.complete(hello_request());
    CHECK(r.text == "hello");
    CHECK(calls == 3);
    REQUIRE(slept.size() == 2);
    CHECK(slept[0].count() == 1000);
    CHECK(slept[1].count() == 2000);
    CHECK(auth == "Bearer secret");
    CHECK(seen.at("model") == "test-model");
    CHECK_FALSE(seen.contains("tag"));
}

TEST_CASE("5xx until the retry budget runs out") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 503;
    });
    std::vector<std::chrono::milliseconds> slept;
    auto o = options_for(server, slept);
    o.retry.max_attempts = 3;
    OpenAIProvider provider(o);
    CHECK_THROWS_AS(provider.complete(hello_request()), RetriesExhaustedError);
    CHECK(calls == 3);
    CHECK(slept.size() == 2);
}

TEST_CASE("401 fails immediately") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 401;
    });
    std::vector<std::chrono::milliseconds> slept;
    OpenAIProvider provider(options_for(server, slept));
    CHECK_THROWS_AS(provider.complete(hello_request()), AuthError);
    CHECK(calls == 1);
    CHECK(slept.empty());
}

TEST_CASE("missing API key is an auth error without a request") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.set_content(kOkBody, "application/json");
    });
    std::vector<std::chrono::milliseconds> slept;
    auto o = options_for(server, slept);
    o.endpoint.api_key.clear();
    OpenAIProvider provider(o);
    CHECK_THROWS_AS(provider.complete(hello_request()), AuthError);
    CHECK(calls == 0);
}

TEST_CASE("malformed 200 body is not retried") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.set_content(R"({"id":"x"})", "application/json");
    });
    std::vector<std::chrono::milliseconds> slept;
    OpenAIProvider provider(options_for(server, slept));
    CHECK_THROWS_AS(provider.complete(hello_request()), MalformedResponseError);
    CHECK(calls == 1);
}

TEST_CASE("per-model endpoint override") {
    HttpProviderOptions o;
    o.endpoint = {"https://a.example/v1", "k1"};
    o.model_endpoints["llama"] = {"https://b.example/v1", "k2"};
    OpenAIProvider provider(o);
    CHECK(provider.endpoint_for("llama").base_url == "https://b.example/v1");
    CHECK(provider.endpoint_for("gpt").api_key == "k1");
}

TEST_CASE("mock provider replays by tag and model") {
    auto mock = MockProvider::from_json(json::parse(R"({
        "replies": {"judge": ["generic"], "judge@special": [{"text": "special", "usage": {"prompt_tokens": 5, "completion_tokens": 1}}],
                    "candidate": [{"error": "boom"}]}})"));
    auto r = hello_request();
    CHECK(mock->complete(r).text == "generic");
    r.model = "special";
    const auto special = mock->complete(r);
    CHECK(special.text == "special");
    CHECK(special.usage == UsageRecord{5, 1});
    CHECK_THROWS_AS(mock->complete(r), ScriptUnderrunError);
    r.tag = "candidate";
    CHECK_THROWS_AS(mock->complete(r), ProviderError);
    r.tag = "single";
    CHECK_THROWS_AS(mock->complete(r), ScriptUnderrunError);
    CHECK(mock->requests().size() == 5);
    mock->reset();
    CHECK(mock->requests().empty());
    CHECK(mock->requires_sequential_calls());
}

TEST_CASE("mock fabricates usage from word counts") {
    MockProvider mock({{"judge", {ScriptedReply{"three word reply", std::nullopt, ""}}}});
    const auto r = mock.complete(hello_request());
    CHECK(r.usage.completion_tokens == 3);
    CHECK(r.usage.prompt_tokens == 2);
}

TEST_CASE("cycling mock wraps around") {
    MockProvider mock({{"judge", {ScriptedReply{"a", std::nullopt, ""}, ScriptedReply{"b", std::nullopt, ""}}}}, true);
    std::string seq;
    for (int i = 0; i < 5; ++i) seq += mock.complete(hello_request()).text;
    CHECK(seq == "ababa");
}

#include "dforge/experiment.hpp"
#include "e2e.hpp"

TEST_CASE("concurrent HTTP pipeline writes the same records as a sequential one") {
    const PromptSet prompts;
    std::atomic<int> in_flight{0}, peak{0};
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        const auto body = json::parse(req.body);
        const auto& msgs = body.at("messages");
        const auto first = msgs[0].at("content").get<std::string>();
        std::string reply;
        if (msgs[0].at("role") == "user") {
            reply = first.find("Welder") != std::string::npos ? R"({"Reason": "r", "Choice": "1"})"
                                                                : R"({"Reason": "r", "Choice": "Tie"})";
        } else if (first == prompts.single_system) {
            reply = "interviewer: Hi\ncandidate: Hello";
        } else if (msgs.size() % 2 == 0) {
            reply = "Hello.";
        } else {
            reply = msgs.size() >= 3 ? "I got what I needed, thank you for your time." : "Good morning.";
        }
        --in_flight;
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}},
                             {"usage", {{"prompt_tokens", msgs.size() * 10}, {"completion_tokens", 5}}}}
                            .dump(),
                        "application/json");
    });

    auto run = [&](std::size_t concurrency, const std::string& name) {
        const auto dir = testing_support::fresh_dir(name);
        auto config = load_config(testing_support::demo_dir() / "config.json");
        config.provider.endpoint = {server.base_url(), "k"};
        config.provider.concurrency = concurrency;
        ExperimentStore store(dir);
        auto provider = make_http_provider(config);
        CHECK(cmd_generate(config, store, *provider, {}).failures.empty());
        CHECK(cmd_judge(config, store, *provider, {}).failures.empty());
        return std::pair{testing_support::slurp(dir / kDialoguesFile), testing_support::slurp(dir / kJudgmentsFile)};
    };
    const auto sequential = run(1, "http_seq");
    peak = 0;
    const auto parallel = run(4, "http_par");
    CHECK(peak > 1);
    CHECK(peak <= 4);
    CHECK(sequential == parallel);
    CHECK(std::count(parallel.second.begin(), parallel.second.end(), '\n') == 240);
}
