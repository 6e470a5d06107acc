#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <vector>

#include <httplib.h>

#include "rulearn/agent.hpp"
#include "rulearn/backend.hpp"

using namespace rulearn;

namespace {

SessionInfo session_info(std::uint64_t env_seed = 11, int trial_index = 0) {
    SessionInfo info;
    info.puzzle_id = "p";
    info.family = "reactor";
    info.env_seed = env_seed;
    info.agent_variant = "baseline";
    info.trial_index = trial_index;
    return info;
}

TurnRequest select_request(const std::vector<MenuEntry>& menu) {
    TurnRequest request;
    request.purpose = "select";
    request.prompt_text = "pick";
    request.menu = menu;
    return request;
}

std::vector<MenuEntry> mixed_menu() {
    std::vector<MenuEntry> menu(5);
    menu[0] = {1, ActionKind::Perceptual, "gallery", "perceive", "look", InputSchema::None,
               json::object()};
    menu[1] = {2, ActionKind::Interactive, "F1", "evaluate", "eval", InputSchema::Number,
               json{{"min", -100}, {"max", 100}}};
    menu[2] = {3, ActionKind::Interactive, "door", "enter_code", "code",
               InputSchema::DigitTriple, json{{"digits", 3}}};
    menu[3] = {4, ActionKind::Interactive, "reactor", "react", "react",
               InputSchema::MaterialPair, json{{"materials", json::array({"AB", "C"})}}};
    menu[4] = {5, ActionKind::Interactive, "console", "submit", "submit",
               InputSchema::ValueAssignment,
               json{{"constants", json::array({"a", "b"})}}};
    return menu;
}

// A local OpenAI-style endpoint with scriptable status codes. Register
// handlers, then call start().
struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/v1";
    }
};

std::string completion_body(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}}
        .dump();
}

BackendConfig test_config(const std::string& base_url) {
    BackendConfig config;
    config.base_url = base_url;
    config.model_name = "test-model";
    config.api_key_env = "RULEARN_TEST_KEY";
    config.temperature = 0.25;
    config.transport_retries = 3;
    config.initial_backoff_ms = 1;
    config.timeout_ms = 5000;
    return config;
}

}  // namespace

TEST_CASE("replay sessions walk the script and restart per session") {
    ReplayBackend backend({"one", "two"}, ReplayExhaustion::Fail);
    auto a = backend.start_session(session_info());
    TurnRequest request = select_request({});
    CHECK(a->complete(request) == "one");
    CHECK(a->complete(request) == "two");
    auto b = backend.start_session(session_info());
    CHECK(b->complete(request) == "one");
}

TEST_CASE("replay exhaustion either repeats the last line or fails loudly") {
    ReplayBackend repeat({"only"}, ReplayExhaustion::RepeatLast);
    auto session = repeat.start_session(session_info());
    TurnRequest request = select_request({});
    CHECK(session->complete(request) == "only");
    CHECK(session->complete(request) == "only");
    CHECK(session->complete(request) == "only");

    ReplayBackend strict({"only"}, ReplayExhaustion::Fail);
    auto s = strict.start_session(session_info());
    CHECK(s->complete(request) == "only");
    try {
        s->complete(request);
        FAIL("expected an exhaustion error");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()) == "replay script exhausted after 1 replies");
        CHECK_FALSE(e.auth_failure);
    }
}

TEST_CASE("random sessions are deterministic per session key") {
    RandomBackend backend(99);
    TurnRequest request = select_request(mixed_menu());

    auto first = backend.start_session(session_info(11, 3));
    auto second = backend.start_session(session_info(11, 3));
    for (int i = 0; i < 10; ++i) CHECK(first->complete(request) == second->complete(request));

    auto other_trial = backend.start_session(session_info(11, 4));
    auto baseline = backend.start_session(session_info(11, 3));
    std::string a, b;
    for (int i = 0; i < 10; ++i) {
        a += baseline->complete(request) + "|";
        b += other_trial->complete(request) + "|";
    }
    CHECK(a != b);
}

TEST_CASE("every random reply parses against the menu it was offered") {
    RandomBackend backend(7);
    auto session = backend.start_session(session_info());
    TurnRequest request = select_request(mixed_menu());
    std::vector<bool> seen(6, false);
    for (int i = 0; i < 60; ++i) {
        std::string reply = session->complete(request);
        std::string error;
        auto parsed = parse_action_reply(reply, request.menu, &error);
        REQUIRE_MESSAGE(parsed.has_value(), "reply '" << reply << "': " << error);
        seen[static_cast<size_t>(parsed->menu_id)] = true;
    }
    for (int id = 1; id <= 5; ++id) CHECK(seen[static_cast<size_t>(id)]);
}

TEST_CASE("random abduction replies are fixed and well-formed") {
    RandomBackend backend(7);
    auto session = backend.start_session(session_info());
    TurnRequest request;
    request.purpose = "abduce";
    std::string reply = session->complete(request);
    CHECK(reply ==
          "HYPOTHESIS: no explanation, acting at random\n"
          "PLAN: keep picking random actions\n"
          "KEEP:");
    std::string error;
    auto parsed = parse_abduction_reply(reply, &error);
    REQUIRE(parsed.has_value());
    CHECK(parsed->kept_facts.empty());
}

TEST_CASE("backend configs read json with sane defaults") {
    BackendConfig c = BackendConfig::from_json(json{{"base_url", "https://api.test/v1"}});
    CHECK(c.base_url == "https://api.test/v1");
    CHECK(c.id == "http");
    CHECK(c.api_key_env == "RULEARN_API_KEY");
    CHECK(c.temperature == 1.0);
    CHECK(c.timeout_ms == 60000);
    CHECK(c.transport_retries == 3);
    CHECK(c.rate_limit == 4);

    BackendConfig named = BackendConfig::from_json(
        json{{"base_url", "https://x/v1"}, {"model", "m1"}});
    CHECK(named.model_name == "m1");
    BackendConfig alt = BackendConfig::from_json(
        json{{"base_url", "https://x/v1"}, {"model_name", "m2"}});
    CHECK(alt.model_name == "m2");

    CHECK_THROWS(BackendConfig::from_json(json{{"model", "m"}}));

    BackendConfig round = BackendConfig::from_json(named.to_json());
    CHECK(round.model_name == named.model_name);
    CHECK(round.base_url == named.base_url);
}

TEST_CASE("http completions send an openai-style chat request") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::string got_auth, got_path, got_body;
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           got_auth = req.get_header_value("Authorization");
                           got_path = req.path;
                           got_body = req.body;
                           res.set_content(completion_body("ACTION: 1"), "application/json");
                       });
    server.start();

    HttpBackend backend(test_config(server.base_url()));
    CHECK(backend.complete_once("PROMPT TEXT") == "ACTION: 1");

    CHECK(got_auth == "Bearer secret-key");
    CHECK(got_path == "/v1/chat/completions");
    json body = json::parse(got_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == 0.25);
    REQUIRE(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "PROMPT TEXT");
}

TEST_CASE("transient server errors are retried until a reply lands") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++calls <= 2) {
                               res.status = 500;
                               return;
                           }
                           res.set_content(completion_body("ok"), "application/json");
                       });
    server.start();

    HttpBackend backend(test_config(server.base_url()));
    CHECK(backend.complete_once("p") == "ok");
    CHECK(calls.load() == 3);
}

TEST_CASE("a malformed completion body counts as a transient failure") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++calls == 1) {
                               res.set_content("this is not json", "text/plain");
                               return;
                           }
                           res.set_content(completion_body("ok"), "application/json");
                       });
    server.start();

    HttpBackend backend(test_config(server.base_url()));
    CHECK(backend.complete_once("p") == "ok");
    CHECK(calls.load() == 2);
}

TEST_CASE("authorization rejections stop immediately and are flagged") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 401;
                       });
    server.start();

    HttpBackend backend(test_config(server.base_url()));
    try {
        backend.complete_once("p");
        FAIL("expected an auth error");
    } catch (const BackendError& e) {
        CHECK(e.auth_failure);
        CHECK(std::string(e.what()).find("HTTP 401") != std::string::npos);
    }
    CHECK(calls.load() == 1);
}

TEST_CASE("a missing key variable fails at construction as an auth error") {
    unsetenv("RULEARN_TEST_MISSING_KEY");
    BackendConfig config = test_config("http://127.0.0.1:1/v1");
    config.api_key_env = "RULEARN_TEST_MISSING_KEY";
    try {
        HttpBackend backend(config);
        FAIL("expected a missing-key error");
    } catch (const BackendError& e) {
        CHECK(e.auth_failure);
        CHECK(std::string(e.what()) == "missing API key: set RULEARN_TEST_MISSING_KEY");
    }
}

TEST_CASE("persistent failures exhaust the retry budget with a clear error") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 503;
                       });
    server.start();

    BackendConfig config = test_config(server.base_url());
    config.transport_retries = 2;
    HttpBackend backend(config);
    try {
        backend.complete_once("p");
        FAIL("expected exhaustion");
    } catch (const BackendError& e) {
        CHECK_FALSE(e.auth_failure);
        CHECK(std::string(e.what()).find("backend unreachable after 3 attempts") !=
              std::string::npos);
        CHECK(std::string(e.what()).find("HTTP 503") != std::string::npos);
    }
    CHECK(calls.load() == 3);
}

TEST_CASE("non-retryable statuses fail fast without burning retries") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 418;
                           res.set_content("teapot", "text/plain");
                       });
    server.start();

    HttpBackend backend(test_config(server.base_url()));
    try {
        backend.complete_once("p");
        FAIL("expected a request failure");
    } catch (const BackendError& e) {
        CHECK_FALSE(e.auth_failure);
        CHECK(std::string(e.what()).find("HTTP 418") != std::string::npos);
    }
    CHECK(calls.load() == 1);
}

TEST_CASE("the rate limit bounds in-flight requests under parallel load") {
    setenv("RULEARN_TEST_KEY", "secret-key", 1);
    TestServer server;
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           int now = ++in_flight;
                           int prev = peak.load();
                           while (prev < now && !peak.compare_exchange_weak(prev, now)) {
                           }
                           std::this_thread::sleep_for(std::chrono::milliseconds(40));
                           --in_flight;
                           res.set_content(completion_body("ok"), "application/json");
                       });
    server.start();

    BackendConfig config = test_config(server.base_url());
    config.rate_limit = 2;
    HttpBackend backend(config);
    CHECK(backend.max_parallel_sessions() == 2);

    std::vector<std::thread> workers;
    std::atomic<int> successes{0};
    for (int i = 0; i < 6; ++i)
        workers.emplace_back([&] {
            if (backend.complete_once("p") == "ok") ++successes;
        });
    for (auto& w : workers) w.join();
    CHECK(successes.load() == 6);
    CHECK(peak.load() <= 2);
}
