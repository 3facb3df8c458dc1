#include "gca/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::error;
}

std::uint64_t request_key(const ChatRequest& req) {
    // length-prefixed field concatenation keeps the hash unambiguous
    std::string canon;
    auto field = [&canon](std::string_view s) {
        canon += std::to_string(s.size());
        canon.push_back(':');
        canon.append(s);
    };
    field(req.system);
    for (const auto& t : req.turns) {
        field(t.role);
        field(t.content);
    }
    char params[64];
    std::snprintf(params, sizeof(params), "t=%.6f;m=%d", req.params.temperature,
                  req.params.max_tokens);
    field(params);  // seed intentionally excluded
    return fnv1a(canon);
}

std::string request_key_hex(const ChatRequest& req) {
    return to_hex(request_key(req));
}

nlohmann::ordered_json exchange_to_json(const ChatExchange& ex) {
    nlohmann::ordered_json turns = nlohmann::ordered_json::array();
    for (const auto& t : ex.request.turns)
        turns.push_back({{"role", t.role}, {"content", t.content}});
    nlohmann::ordered_json params{{"temperature", ex.request.params.temperature},
                                  {"max_tokens", ex.request.params.max_tokens}};
    if (ex.request.params.seed) params["seed"] = *ex.request.params.seed;
    return nlohmann::ordered_json{
        {"key", request_key_hex(ex.request)},
        {"request",
         {{"system", ex.request.system}, {"turns", std::move(turns)}, {"params", std::move(params)}}},
        {"response",
         {{"content", ex.response.content},
          {"finish_reason", std::string(to_string(ex.response.finish_reason))}}}};
}

ChatExchange exchange_from_json(const nlohmann::json& doc) {
    ChatExchange ex;
    const auto& req = doc.at("request");
    ex.request.system = req.value("system", "");
    if (req.contains("turns")) {
        for (const auto& t : req.at("turns"))
            ex.request.turns.push_back({t.value("role", "user"), t.value("content", "")});
    }
    if (req.contains("params")) {
        const auto& p = req.at("params");
        ex.request.params.temperature = p.value("temperature", 0.0);
        ex.request.params.max_tokens = p.value("max_tokens", 0);
        if (p.contains("seed") && !p.at("seed").is_null())
            ex.request.params.seed = p.at("seed").get<std::uint64_t>();
    }
    const auto& res = doc.at("response");
    ex.response.content = res.value("content", "");
    ex.response.finish_reason = finish_reason_from_string(res.value("finish_reason", "stop"));
    return ex;
}

std::vector<ChatExchange> load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fixture: " + path);
    std::vector<ChatExchange> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            out.push_back(exchange_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad fixture line: " +
                              e.what());
        }
    }
    return out;
}

void save_fixture(const std::vector<ChatExchange>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write fixture: " + path);
    for (const auto& ex : entries) out << exchange_to_json(ex).dump() << "\n";
}

// --- ScriptedBackend --------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) {
    for (auto& r : responses) queue_.push_back({std::move(r), FinishReason::stop});
}

void ScriptedBackend::push(std::string content, FinishReason reason) {
    std::lock_guard lock(mu_);
    queue_.push_back({std::move(content), reason});
}

size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    if (queue_.empty())
        throw FixtureMiss("scripted queue exhausted", request_key_hex(request));
    ChatResponse res = std::move(queue_.front());
    queue_.pop_front();
    return res;
}

// --- ReplayBackend ----------------------------------------------------------

ReplayBackend::ReplayBackend(const std::string& fixture_path)
    : fixture_(fixture_path), entries_(load_fixture(fixture_path)) {
    consumed_.assign(entries_.size(), false);
}

ReplayBackend::ReplayBackend(std::vector<ChatExchange> entries) : entries_(std::move(entries)) {
    consumed_.assign(entries_.size(), false);
}

size_t ReplayBackend::remaining() const {
    std::lock_guard lock(mu_);
    size_t n = 0;
    for (bool c : consumed_)
        if (!c) ++n;
    return n;
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
    const std::uint64_t key = request_key(request);
    std::lock_guard lock(mu_);
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (!consumed_[i] && request_key(entries_[i].request) == key) {
            consumed_[i] = true;
            return entries_[i].response;
        }
    }
    // fall back to file order so evolved prompts still replay
    while (cursor_ < entries_.size() && consumed_[cursor_]) ++cursor_;
    if (cursor_ < entries_.size()) {
        consumed_[cursor_] = true;
        return entries_[cursor_++].response;
    }
    throw FixtureMiss("replay fixture exhausted (" + fixture_ + "), request " + to_hex(key),
                      to_hex(key));
}

// --- RecordingBackend -------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner,
                                   const std::string& fixture_path)
    : inner_(std::move(inner)), path_(fixture_path) {
    std::ofstream out(path_, std::ios::trunc);  // start a fresh fixture
    if (!out) throw ConfigError("cannot write fixture: " + path_);
}

std::string RecordingBackend::id() const {
    return "record(" + inner_->id() + ")";
}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse res = inner_->complete(request);
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app);
    out << exchange_to_json({request, res}).dump() << "\n";
    return res;
}

// --- CallLog ----------------------------------------------------------------

void CallLog::append(const ChatExchange& ex) {
    std::lock_guard lock(mu_);
    entries_.push_back(ex);
}

std::vector<ChatExchange> CallLog::snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
}

void CallLog::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
}

ChatResponse LoggingBackend::complete(const ChatRequest& request) {
    ChatResponse res = inner_->complete(request);
    if (log_) log_->append({request, res});
    return res;
}

// --- LiveBackend ------------------------------------------------------------

namespace {

struct UrlParts {
    bool https = false;
    std::string host_port;  // "host" or "host:port"
    std::string path;
};

UrlParts parse_url(const std::string& url) {
    UrlParts parts;
    std::string rest = url;
    if (rest.rfind("https://", 0) == 0) {
        parts.https = true;
        rest = rest.substr(8);
    } else if (rest.rfind("http://", 0) == 0) {
        rest = rest.substr(7);
    } else {
        throw ConfigError("endpoint must be an http(s) URL: " + url);
    }
    auto slash = rest.find('/');
    parts.host_port = rest.substr(0, slash);
    parts.path = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
    return parts;
}

// bounded in-flight counter; C++20 counting_semaphore needs a compile-time
// max, so use a condvar instead
class Gate {
  public:
    explicit Gate(int limit) : limit_(limit) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

}  // namespace

struct LiveBackend::Impl {
    UrlParts url;
    std::string scheme_host;  // e.g. "http://127.0.0.1:8080"
    std::string auth_env;
    RetryPolicy retry;
    Gate gate;

    Impl(const std::string& endpoint, std::string auth, RetryPolicy r, int max_in_flight)
        : url(parse_url(endpoint)),
          scheme_host((url.https ? "https://" : "http://") + url.host_port),
          auth_env(std::move(auth)),
          retry(r),
          gate(max_in_flight > 0 ? max_in_flight : 1) {}
};

LiveBackend::LiveBackend(std::string endpoint, std::string model, std::string auth_env,
                         RetryPolicy retry, int max_in_flight)
    : impl_(std::make_unique<Impl>(endpoint, std::move(auth_env), retry, max_in_flight)),
      model_(std::move(model)) {}

LiveBackend::~LiveBackend() = default;

ChatResponse LiveBackend::complete(const ChatRequest& request) {
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    if (!request.system.empty())
        messages.push_back({{"role", "system"}, {"content", request.system}});
    for (const auto& t : request.turns)
        messages.push_back({{"role", t.role}, {"content", t.content}});
    nlohmann::ordered_json body{{"model", model_},
                                {"messages", std::move(messages)},
                                {"temperature", request.params.temperature}};
    if (request.params.max_tokens > 0) body["max_tokens"] = request.params.max_tokens;
    if (request.params.seed) body["seed"] = *request.params.seed;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!impl_->auth_env.empty()) {
        const char* token = std::getenv(impl_->auth_env.c_str());
        if (!token)
            throw ConfigError("auth environment variable not set: " + impl_->auth_env);
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error = "no attempt made";
    bool rate_limited = false;
    for (int attempt = 0; attempt < std::max(1, impl_->retry.attempts); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(impl_->retry.backoff_ms * attempt));
        impl_->gate.acquire();
        httplib::Client cli(impl_->scheme_host);
        cli.set_read_timeout(120, 0);
        auto res = cli.Post(impl_->url.path, headers, payload, "application/json");
        impl_->gate.release();
        if (!res) {
            last_error = "transport error " + std::to_string(static_cast<int>(res.error()));
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            rate_limited = res->status == 429;
            last_error = "http " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError("chat request failed: http " + std::to_string(res->status) +
                               " " + res->body);
        try {
            auto doc = nlohmann::json::parse(res->body);
            const auto& choice = doc.at("choices").at(0);
            ChatResponse out;
            out.content = choice.at("message").value("content", "");
            out.finish_reason =
                finish_reason_from_string(choice.value("finish_reason", "stop"));
            return out;
        } catch (const std::exception& e) {
            throw BackendError(std::string("malformed chat response: ") + e.what());
        }
    }
    if (rate_limited) throw RateLimited("rate limited after retries: " + last_error);
    throw Timeout("chat request failed after retries: " + last_error);
}

// --- config -----------------------------------------------------------------

BackendMode backend_mode_from_string(std::string_view s) {
    if (s == "live") return BackendMode::live;
    if (s == "record") return BackendMode::record;
    if (s == "replay") return BackendMode::replay;
    if (s == "scripted") return BackendMode::scripted;
    throw ConfigError("unknown backend mode: " + std::string(s));
}

std::string_view to_string(BackendMode m) {
    switch (m) {
        case BackendMode::live: return "live";
        case BackendMode::record: return "record";
        case BackendMode::replay: return "replay";
        case BackendMode::scripted: return "scripted";
    }
    return "replay";
}

BackendConfig BackendConfig::from_json(const nlohmann::json& doc) {
    BackendConfig cfg;
    cfg.mode = backend_mode_from_string(doc.value("mode", "replay"));
    cfg.endpoint = doc.value("endpoint", "");
    cfg.model = doc.value("model", "");
    cfg.auth_env = doc.value("auth_env", "");
    cfg.fixture_path = doc.value("fixture", doc.value("fixture_path", ""));
    cfg.max_in_flight = doc.value("max_in_flight", 4);
    cfg.retry.attempts = doc.value("retry_attempts", 3);
    cfg.retry.backoff_ms = doc.value("retry_backoff_ms", 250);
    cfg.temperature = doc.value("temperature", 0.0);
    return cfg;
}

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& cfg) {
    switch (cfg.mode) {
        case BackendMode::scripted: {
            if (cfg.fixture_path.empty())
                throw ConfigError("scripted mode requires a fixture path");
            // scripted fixtures are plain JSON arrays of response strings
            std::ifstream in(cfg.fixture_path);
            if (!in) throw ConfigError("cannot open fixture: " + cfg.fixture_path);
            auto doc = nlohmann::json::parse(in);
            return std::make_shared<ScriptedBackend>(doc.get<std::vector<std::string>>());
        }
        case BackendMode::replay:
            if (cfg.fixture_path.empty())
                throw ConfigError("replay mode requires a fixture path");
            return std::make_shared<ReplayBackend>(cfg.fixture_path);
        case BackendMode::live:
            if (cfg.endpoint.empty() || cfg.auth_env.empty())
                throw ConfigError("live mode requires endpoint and auth_env");
            return std::make_shared<LiveBackend>(cfg.endpoint, cfg.model, cfg.auth_env,
                                                 cfg.retry, cfg.max_in_flight);
        case BackendMode::record: {
            if (cfg.endpoint.empty() || cfg.auth_env.empty())
                throw ConfigError("record mode requires endpoint and auth_env");
            if (cfg.fixture_path.empty())
                throw ConfigError("record mode requires a fixture path");
            auto live = std::make_shared<LiveBackend>(cfg.endpoint, cfg.model, cfg.auth_env,
                                                      cfg.retry, cfg.max_in_flight);
            return std::make_shared<RecordingBackend>(live, cfg.fixture_path);
        }
    }
    throw ConfigError("unhandled backend mode");
}

}  // namespace gca
