#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace gca {

struct ChatTurn {
    std::string role;  // "user" | "assistant"
    std::string content;

    bool operator==(const ChatTurn&) const = default;
};

struct ChatParams {
    double temperature = 0.0;
    int max_tokens = 0;  // 0 = provider default
    std::optional<std::uint64_t> seed;

    bool operator==(const ChatParams&) const = default;
};

struct ChatRequest {
    std::string system;
    std::vector<ChatTurn> turns;
    ChatParams params;

    bool operator==(const ChatRequest&) const = default;
};

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view s);

struct ChatResponse {
    std::string content;
    FinishReason finish_reason = FinishReason::stop;
};

struct ChatExchange {
    ChatRequest request;
    ChatResponse response;
};

// Stable key over (system, turns, params minus seed). Recorded fixtures are
// matched by this key first, so prompt-identical calls replay regardless of
// call order; seed is excluded so reseeded runs still hit the fixture.
std::uint64_t request_key(const ChatRequest& req);
std::string request_key_hex(const ChatRequest& req);

nlohmann::ordered_json exchange_to_json(const ChatExchange& ex);
ChatExchange exchange_from_json(const nlohmann::json& doc);

// --- backends -------------------------------------------------------------

class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Canned responses served in order; exhaustion raises FixtureMiss.
class ScriptedBackend : public ChatBackend {
  public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> responses);

    void push(std::string content, FinishReason reason = FinishReason::stop);
    size_t remaining() const;

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "scripted"; }

  private:
    mutable std::mutex mu_;
    std::deque<ChatResponse> queue_;
};

// Serves a recorded fixture: primary lookup by request key, falling back to
// file order for requests whose prompts have drifted since recording.
class ReplayBackend : public ChatBackend {
  public:
    explicit ReplayBackend(const std::string& fixture_path);
    explicit ReplayBackend(std::vector<ChatExchange> entries);

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "replay:" + fixture_; }

    size_t remaining() const;

  private:
    std::string fixture_ = "<memory>";
    mutable std::mutex mu_;
    std::vector<ChatExchange> entries_;
    std::vector<bool> consumed_;
    size_t cursor_ = 0;  // sequence-order fallback position
};

// Wraps another backend and appends every exchange to a JSONL fixture.
class RecordingBackend : public ChatBackend {
  public:
    RecordingBackend(std::shared_ptr<ChatBackend> inner, const std::string& fixture_path);

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override;

  private:
    std::shared_ptr<ChatBackend> inner_;
    std::string path_;
    std::mutex mu_;
};

// Captures every exchange in memory; used for provenance and the
// information-asymmetry assertions.
class CallLog {
  public:
    void append(const ChatExchange& ex);
    std::vector<ChatExchange> snapshot() const;
    void clear();

  private:
    mutable std::mutex mu_;
    std::vector<ChatExchange> entries_;
};

class LoggingBackend : public ChatBackend {
  public:
    LoggingBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<CallLog> log)
        : inner_(std::move(inner)), log_(std::move(log)) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<ChatBackend> inner_;
    std::shared_ptr<CallLog> log_;
};

struct RetryPolicy {
    int attempts = 3;
    int backoff_ms = 250;
};

// OpenAI-compatible chat-completions client. The bearer token is read from
// the named environment variable; max_in_flight bounds concurrent requests.
class LiveBackend : public ChatBackend {
  public:
    LiveBackend(std::string endpoint, std::string model, std::string auth_env,
                RetryPolicy retry = {}, int max_in_flight = 4);
    ~LiveBackend() override;

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "live:" + model_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string model_;
};

enum class BackendMode { live, record, replay, scripted };

BackendMode backend_mode_from_string(std::string_view s);
std::string_view to_string(BackendMode m);

struct BackendConfig {
    BackendMode mode = BackendMode::replay;
    std::string endpoint;       // live/record
    std::string model;          // live/record
    std::string auth_env;       // live/record: env var holding the token
    std::string fixture_path;   // replay/scripted/record
    int max_in_flight = 4;
    RetryPolicy retry;
    double temperature = 0.0;

    static BackendConfig from_json(const nlohmann::json& doc);
};

// Builds a backend per config. replay/scripted need fixture_path; live needs
// endpoint and auth_env; record wraps a live backend and tees to fixture_path.
std::shared_ptr<ChatBackend> make_backend(const BackendConfig& cfg);

std::vector<ChatExchange> load_fixture(const std::string& path);
void save_fixture(const std::vector<ChatExchange>& entries, const std::string& path);

}  // namespace gca
