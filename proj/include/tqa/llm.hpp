#pragma once
// Chat-completion backends behind one interface: a remote client for
// the de-facto chat-completions wire shape (bounded retries, backoff
// with seeded jitter) and a deterministic scripted mock for tests and
// offline runs.

#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/core.hpp"

namespace tqa {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_name;
    std::string task_id;  // routing hint for scripted backends

    void validate() const {
        if (messages.empty()) throw SchemaError("chat request needs at least one message");
        const std::string& r = messages.front().role;
        if (r != "system" && r != "user") {
            throw SchemaError("first chat message must be system or user, got '" + r + "'");
        }
    }
};

struct ChatUsage {
    long prompt_chars = 0;
    long completion_chars = 0;
};

struct ChatResponse {
    std::string text;
    ChatUsage usage;
};

class TransportError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class StatusError : public std::runtime_error {
public:
    StatusError(int status, const std::string& body_excerpt)
        : std::runtime_error("chat endpoint returned HTTP " + std::to_string(status) + ": " +
                             body_excerpt),
          status(status) {}
    int status;
};

class MockScriptExhausted : public std::runtime_error {
public:
    explicit MockScriptExhausted(const std::string& task_id)
        : std::runtime_error("mock script exhausted for task '" + task_id + "'") {}
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual ChatResponse chat(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Scripted replies, consumed in order. Replies tagged with a task_id
// are served only to requests carrying that task_id; untagged replies
// serve any request.
class MockBackend : public LlmBackend {
public:
    MockBackend() = default;

    explicit MockBackend(std::vector<std::string> replies) {
        for (auto& r : replies) push("", std::move(r));
    }

    void push(std::string task_id, std::string reply) {
        std::lock_guard lock(mutex_);
        scripts_[std::move(task_id)].push_back(std::move(reply));
    }

    // JSON lines of {task_id, reply}; task_id may be omitted or empty.
    static std::shared_ptr<MockBackend> from_script_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open mock script: " + path);
        auto mock = std::make_shared<MockBackend>();
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw std::runtime_error("mock script line " + std::to_string(lineno) + ": " +
                                         e.what());
            }
            mock->push(j.value("task_id", ""), j.at("reply").get<std::string>());
        }
        return mock;
    }

    ChatResponse chat(const ChatRequest& request) override {
        request.validate();
        std::lock_guard lock(mutex_);
        auto it = scripts_.find(request.task_id);
        if (it == scripts_.end() || it->second.empty()) {
            it = scripts_.find("");  // untagged fallback
            if (it == scripts_.end() || it->second.empty()) {
                throw MockScriptExhausted(request.task_id);
            }
        }
        std::string reply = std::move(it->second.front());
        it->second.pop_front();
        ChatUsage usage;
        for (const auto& m : request.messages) usage.prompt_chars += static_cast<long>(m.content.size());
        usage.completion_chars = static_cast<long>(reply.size());
        return {std::move(reply), usage};
    }

    std::string name() const override { return "mock"; }

private:
    std::map<std::string, std::deque<std::string>> scripts_;
    std::mutex mutex_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{200};
    std::uint64_t jitter_seed = 0;
};

namespace detail {

inline bool transient_status(int status) {
    return status == 429 || status == 502 || status == 503 || status == 504;
}

}  // namespace detail

// Pluggable transport so the retry logic is testable without sockets.
// Returns (status, body); throws TransportError on connection failure.
using HttpPostFn =
    std::function<std::pair<int, std::string>(const std::string& path, const std::string& body)>;

// Remote chat-completions client. POSTs {model, messages, temperature,
// max_tokens}; reads choices[0].message.content.
class RemoteChatBackend : public LlmBackend {
public:
    RemoteChatBackend(HttpPostFn post, std::string model_name, std::string path = "/v1/chat/completions",
                      RetryPolicy retry = {})
        : post_(std::move(post)),
          model_name_(std::move(model_name)),
          path_(std::move(path)),
          retry_(retry),
          rng_(retry.jitter_seed) {}

    ChatResponse chat(const ChatRequest& request) override {
        request.validate();
        nlohmann::json body = {
            {"model", request.model_name.empty() ? model_name_ : request.model_name},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : request.messages) {
            messages.push_back({{"role", m.role}, {"content", m.content}});
        }
        body["messages"] = std::move(messages);
        std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
            if (attempt > 0) backoff(attempt);
            int status = 0;
            std::string reply_body;
            try {
                std::tie(status, reply_body) = post_(path_, payload);
            } catch (const TransportError& e) {
                last_error = e.what();
                continue;
            }
            if (status >= 200 && status < 300) return parse_response(reply_body);
            if (detail::transient_status(status)) {
                last_error = "HTTP " + std::to_string(status);
                continue;
            }
            throw StatusError(status, reply_body.substr(0, 200));
        }
        throw TransportError("chat request failed after " + std::to_string(retry_.attempts) +
                             " attempts: " + last_error);
    }

    std::string name() const override { return "remote:" + model_name_; }

private:
    void backoff(int attempt) {
        std::uniform_int_distribution<long> jitter(0, retry_.base_delay.count() / 2);
        long ms = retry_.base_delay.count() * (1L << (attempt - 1)) + jitter(rng_);
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    static ChatResponse parse_response(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransportError("unparseable chat response: " + std::string(e.what()));
        }
        if (!j.contains("choices") || j["choices"].empty()) {
            throw TransportError("chat response has no choices");
        }
        ChatResponse r;
        r.text = j["choices"][0]["message"]["content"].get<std::string>();
        if (j.contains("usage")) {
            r.usage.prompt_chars = j["usage"].value("prompt_tokens", 0);
            r.usage.completion_chars = j["usage"].value("completion_tokens", 0);
        }
        return r;
    }

    HttpPostFn post_;
    std::string model_name_;
    std::string path_;
    RetryPolicy retry_;
    std::mt19937_64 rng_;
};

}  // namespace tqa
