#pragma once
// Text-embedding backends. The default is an offline deterministic
// feature-hashing embedder (signed character 3-gram hashing, L2
// normalized); a remote backend speaks the common HTTP embeddings wire
// shape.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tqa {

using Vector = std::vector<float>;

class EmbeddingError : public std::runtime_error {
public:
    EmbeddingError(std::string msg, std::size_t input_index)
        : std::runtime_error(std::move(msg)), input_index(input_index) {}
    std::size_t input_index;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

// Signed feature hashing over character 3-grams of the byte string,
// padded with sentinel boundary bytes so every non-empty text yields at
// least one gram. Empty text maps to the zero vector.
class HashingEmbedder : public EmbeddingBackend {
public:
    explicit HashingEmbedder(std::size_t dim = 512, std::uint64_t salt = 0)
        : dim_(dim), salt_(salt) {}

    std::size_t dim() const override { return dim_; }

    std::vector<Vector> embed(const std::vector<std::string>& texts) override {
        std::vector<Vector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    Vector embed_one(const std::string& text) const {
        Vector v(dim_, 0.0f);
        if (text.empty()) return v;
        std::string padded;
        padded.reserve(text.size() + 2);
        padded.push_back('\x02');
        padded.append(text);
        padded.push_back('\x03');
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            std::uint64_t h = fnv1a(padded.data() + i, 3);
            std::size_t bucket = static_cast<std::size_t>(h % dim_);
            float sign = ((h >> 32) & 1) ? 1.0f : -1.0f;
            v[bucket] += sign;
        }
        double norm = 0.0;
        for (float x : v) norm += static_cast<double>(x) * x;
        if (norm > 0.0) {
            float inv = static_cast<float>(1.0 / std::sqrt(norm));
            for (float& x : v) x *= inv;
        }
        return v;
    }

private:
    std::uint64_t fnv1a(const char* data, std::size_t n) const {
        std::uint64_t h = 14695981039346656037ULL ^ salt_;
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ULL;
        }
        return h;
    }

    std::size_t dim_;
    std::uint64_t salt_;
};

}  // namespace tqa
