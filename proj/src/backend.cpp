#include "rulearn/backend.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "rulearn/rng.hpp"

namespace rulearn {

namespace {

class ReplaySession : public DecisionSession {
public:
    ReplaySession(const std::vector<std::string>* script, ReplayExhaustion exhaustion)
        : script_(script), exhaustion_(exhaustion) {}

    std::string complete(const TurnRequest&) override {
        if (cursor_ < script_->size()) return (*script_)[cursor_++];
        if (exhaustion_ == ReplayExhaustion::RepeatLast && !script_->empty())
            return script_->back();
        throw BackendError("replay script exhausted after " +
                           std::to_string(script_->size()) + " replies");
    }

private:
    const std::vector<std::string>* script_;
    ReplayExhaustion exhaustion_;
    size_t cursor_ = 0;
};

class RandomSession : public DecisionSession {
public:
    explicit RandomSession(std::uint64_t seed) : rng_(seed) {}

    std::string complete(const TurnRequest& request) override {
        if (request.purpose == "abduce")
            return "HYPOTHESIS: no explanation, acting at random\n"
                   "PLAN: keep picking random actions\n"
                   "KEEP:";
        if (request.menu.empty()) throw BackendError("random backend: empty menu");
        const MenuEntry& entry =
            request.menu[static_cast<size_t>(rng_.below(static_cast<int>(request.menu.size())))];
        std::string reply = "ACTION: " + std::to_string(entry.id);
        switch (entry.schema) {
            case InputSchema::None: break;
            case InputSchema::Number:
                reply += "\nINPUT: " + std::to_string(rng_.range(-3, 3));
                break;
            case InputSchema::DigitTriple:
                reply += "\nINPUT: " + std::to_string(rng_.range(0, 9)) + " " +
                         std::to_string(rng_.range(0, 9)) + " " +
                         std::to_string(rng_.range(0, 9));
                break;
            case InputSchema::MaterialPair: {
                std::vector<std::string> materials;
                if (entry.payload_info.contains("materials"))
                    for (const auto& m : entry.payload_info["materials"])
                        materials.push_back(m.get<std::string>());
                if (materials.empty()) materials = {"A", "B"};
                reply += "\nINPUT: " + rng_.pick(materials) + ", " + rng_.pick(materials);
                break;
            }
            case InputSchema::ValueAssignment: {
                std::string parts;
                if (entry.payload_info.contains("constants"))
                    for (const auto& c : entry.payload_info["constants"]) {
                        if (!parts.empty()) parts += ", ";
                        parts += c.get<std::string>() + "=" + std::to_string(rng_.range(0, 9));
                    }
                if (parts.empty()) parts = "a=" + std::to_string(rng_.range(0, 9));
                reply += "\nINPUT: " + parts;
                break;
            }
        }
        return reply;
    }

private:
    Rng rng_;
};

}  // namespace

ReplayBackend::ReplayBackend(std::vector<std::string> script, ReplayExhaustion exhaustion,
                             std::string id)
    : script_(std::move(script)), exhaustion_(exhaustion), id_(std::move(id)) {}

std::unique_ptr<DecisionSession> ReplayBackend::start_session(const SessionInfo&) {
    return std::make_unique<ReplaySession>(&script_, exhaustion_);
}

RandomBackend::RandomBackend(std::uint64_t seed, std::string id)
    : seed_(seed), id_(std::move(id)) {}

std::unique_ptr<DecisionSession> RandomBackend::start_session(const SessionInfo& info) {
    std::uint64_t session_seed =
        mix_seed(seed_, mix_seed(info.env_seed, static_cast<std::uint64_t>(info.trial_index)));
    return std::make_unique<RandomSession>(session_seed);
}

BackendConfig BackendConfig::from_json(const json& j) {
    BackendConfig c;
    c.id = j.value("id", c.id);
    c.base_url = j.at("base_url").get<std::string>();
    c.model_name = j.value("model", j.value("model_name", c.model_name));
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.transport_retries = j.value("transport_retries", c.transport_retries);
    c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
    c.rate_limit = j.value("rate_limit", c.rate_limit);
    return c;
}

json BackendConfig::to_json() const {
    return json{{"id", id},
                {"base_url", base_url},
                {"model", model_name},
                {"api_key_env", api_key_env},
                {"temperature", temperature},
                {"timeout_ms", timeout_ms},
                {"transport_retries", transport_retries},
                {"initial_backoff_ms", initial_backoff_ms},
                {"rate_limit", rate_limit}};
}

struct HttpBackend::Impl {
    BackendConfig config;
    std::string host;         // scheme://host:port
    std::string path_prefix;  // e.g. /v1
    std::string api_key;

    std::mutex mutex;
    std::condition_variable slot_free;
    int in_flight = 0;

    explicit Impl(BackendConfig cfg) : config(std::move(cfg)) {
        size_t scheme = config.base_url.find("://");
        if (scheme == std::string::npos)
            throw BackendError("backend base_url needs a scheme: " + config.base_url);
        size_t path = config.base_url.find('/', scheme + 3);
        if (path == std::string::npos) {
            host = config.base_url;
        } else {
            host = config.base_url.substr(0, path);
            path_prefix = config.base_url.substr(path);
            while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
        }
        const char* key = std::getenv(config.api_key_env.c_str());
        if (!key || !*key)
            throw BackendError("missing API key: set " + config.api_key_env, true);
        api_key = key;
    }

    struct SlotGuard {
        Impl& impl;
        explicit SlotGuard(Impl& i) : impl(i) {
            std::unique_lock<std::mutex> lock(impl.mutex);
            impl.slot_free.wait(lock,
                                [&] { return impl.in_flight < impl.config.rate_limit; });
            ++impl.in_flight;
        }
        ~SlotGuard() {
            {
                std::lock_guard<std::mutex> lock(impl.mutex);
                --impl.in_flight;
            }
            impl.slot_free.notify_one();
        }
    };

    std::string complete(const std::string& prompt) {
        json body{{"model", config.model_name},
                  {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", config.temperature}};
        const std::string payload = body.dump();
        const std::string path = path_prefix + "/chat/completions";

        std::string last_error;
        for (int attempt = 0; attempt <= config.transport_retries; ++attempt) {
            if (attempt > 0) {
                int backoff = config.initial_backoff_ms * (1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(std::min(backoff, 8000)));
            }
            SlotGuard guard(*this);
            httplib::Client client(host);
            client.set_connection_timeout(config.timeout_ms / 1000,
                                          (config.timeout_ms % 1000) * 1000);
            client.set_read_timeout(config.timeout_ms / 1000,
                                    (config.timeout_ms % 1000) * 1000);
            client.set_bearer_token_auth(api_key);

            httplib::Result res = client.Post(path, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw BackendError("authentication rejected (HTTP " +
                                       std::to_string(res->status) + ")",
                                   true);
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw BackendError("backend request failed: HTTP " +
                                   std::to_string(res->status) + " " + res->body);
            try {
                json reply = json::parse(res->body);
                return reply.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
            } catch (const std::exception& e) {
                last_error = std::string("malformed completion body: ") + e.what();
                continue;
            }
        }
        throw BackendError("backend unreachable after " +
                           std::to_string(config.transport_retries + 1) + " attempts (" +
                           last_error + ")");
    }
};

namespace {

class HttpSession : public DecisionSession {
public:
    explicit HttpSession(HttpBackend& backend) : backend_(backend) {}
    std::string complete(const TurnRequest& request) override {
        return backend_.complete_once(request.prompt_text);
    }

private:
    HttpBackend& backend_;
};

}  // namespace

HttpBackend::HttpBackend(BackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return impl_->config.id; }

int HttpBackend::max_parallel_sessions() const { return impl_->config.rate_limit; }

std::unique_ptr<DecisionSession> HttpBackend::start_session(const SessionInfo&) {
    return std::make_unique<HttpSession>(*this);
}

std::string HttpBackend::complete_once(const std::string& prompt) {
    return impl_->complete(prompt);
}

}  // namespace rulearn
