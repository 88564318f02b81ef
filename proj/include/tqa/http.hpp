#pragma once
// httplib-based transports: the HttpPostFn used by RemoteChatBackend
// and a remote embedding backend speaking the common embeddings wire
// shape. Kept out of llm.hpp so socket-free builds stay light.

#include <cstdlib>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "tqa/embedding.hpp"
#include "tqa/llm.hpp"

namespace tqa {

// base_url like "http://host:port"; the returned function posts JSON
// and throws TransportError on connection failure. Credentials come
// from the environment only (TQA_API_KEY), never from flags or config
// files, and are never echoed into manifests or logs.
inline HttpPostFn make_http_post(const std::string& base_url) {
    auto client = std::make_shared<httplib::Client>(base_url);
    client->set_connection_timeout(10);
    client->set_read_timeout(120);
    if (const char* key = std::getenv("TQA_API_KEY"); key && *key) {
        client->set_default_headers({{"Authorization", std::string("Bearer ") + key}});
    }
    return [client, base_url](const std::string& path, const std::string& body) {
        auto res = client->Post(path, body, "application/json");
        if (!res) throw TransportError("cannot reach " + base_url + path);
        return std::make_pair(res->status, res->body);
    };
}

// POST {model, input: [strings]} -> {data: [{index, embedding}]}.
class RemoteEmbedder : public EmbeddingBackend {
public:
    RemoteEmbedder(HttpPostFn post, std::string model, std::size_t dim,
                   std::string path = "/v1/embeddings")
        : post_(std::move(post)), model_(std::move(model)), dim_(dim), path_(std::move(path)) {}

    std::size_t dim() const override { return dim_; }

    std::vector<Vector> embed(const std::vector<std::string>& texts) override {
        nlohmann::json body = {{"model", model_}, {"input", texts}};
        auto [status, reply] = post_(path_, body.dump());
        if (status < 200 || status >= 300) {
            throw EmbeddingError("embeddings endpoint returned HTTP " + std::to_string(status), 0);
        }
        nlohmann::json j = nlohmann::json::parse(reply);
        std::vector<Vector> out(texts.size());
        for (const auto& item : j.at("data")) {
            std::size_t idx = item.at("index").get<std::size_t>();
            if (idx >= out.size()) throw EmbeddingError("embedding index out of range", idx);
            out[idx] = item.at("embedding").get<Vector>();
            if (out[idx].size() != dim_) {
                throw EmbeddingError("embedding dimension " + std::to_string(out[idx].size()) +
                                         " != configured " + std::to_string(dim_),
                                     idx);
            }
        }
        return out;
    }

private:
    HttpPostFn post_;
    std::string model_;
    std::size_t dim_;
    std::string path_;
};

}  // namespace tqa
