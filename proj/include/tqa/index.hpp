#pragma once
// Exact cosine top-k over embedded chunks: a linear scan with cached
// norms. Corpora here are thousands of chunks, so exactness is cheap
// and keeps the oracle property trivial.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/chunker.hpp"
#include "tqa/embedding.hpp"

namespace tqa {

class ZeroVectorError : public std::runtime_error {
public:
    ZeroVectorError() : std::runtime_error("cosine undefined for zero-norm vector") {}
};

class DimensionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmbeddedChunk {
    Chunk chunk;
    Vector vector;
};

inline double vector_norm(const Vector& v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

inline double cosine(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) {
        throw DimensionError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += static_cast<double>(u[i]) * v[i];
    double nu = vector_norm(u), nv = vector_norm(v);
    if (nu == 0.0 || nv == 0.0) throw ZeroVectorError();
    return dot / (nu * nv);
}

struct ScoredChunk {
    const EmbeddedChunk* chunk;
    double score;
};

// Ordering for result lists: descending score, ties by (doc_id, start).
inline bool ranked_before(double sa, const Chunk& ca, double sb, const Chunk& cb) {
    if (sa != sb) return sa > sb;
    if (ca.doc_id != cb.doc_id) return ca.doc_id < cb.doc_id;
    return ca.start < cb.start;
}

// Single-writer / multi-reader: add() takes the exclusive lock, queries
// the shared one.
class VectorIndex {
public:
    explicit VectorIndex(std::size_t dim = 512) : dim_(dim) {}

    std::size_t dim() const { return dim_; }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }

    void add(std::vector<EmbeddedChunk> chunks) {
        std::unique_lock lock(mutex_);
        for (auto& c : chunks) {
            if (c.vector.size() != dim_) {
                throw DimensionError("index_add: chunk " + c.chunk.doc_id + "[" +
                                     std::to_string(c.chunk.start) + ") has dimension " +
                                     std::to_string(c.vector.size()) + ", index wants " +
                                     std::to_string(dim_));
            }
            norms_.push_back(vector_norm(c.vector));
            entries_.push_back(std::move(c));
        }
    }

    // min(k, size) results, descending cosine, deterministic tie rule.
    std::vector<std::pair<EmbeddedChunk, double>> query_top_k(const Vector& query,
                                                              std::size_t k) const {
        if (k == 0) throw SchemaError("query_top_k: k must be >= 1");
        std::shared_lock lock(mutex_);
        double qn = vector_norm(query);
        if (qn == 0.0) throw ZeroVectorError();
        if (query.size() != dim_) {
            throw DimensionError("query_top_k: query dimension " + std::to_string(query.size()));
        }
        std::vector<std::pair<std::size_t, double>> scored;
        scored.reserve(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (norms_[i] == 0.0) continue;  // zero vectors never match
            double dot = 0.0;
            const Vector& v = entries_[i].vector;
            for (std::size_t j = 0; j < dim_; ++j) dot += static_cast<double>(query[j]) * v[j];
            scored.emplace_back(i, dot / (qn * norms_[i]));
        }
        std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                          [&](const auto& a, const auto& b) {
                              return ranked_before(a.second, entries_[a.first].chunk, b.second,
                                                   entries_[b.first].chunk);
                          });
        std::vector<std::pair<EmbeddedChunk, double>> out;
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            out.emplace_back(entries_[scored[i].first], scored[i].second);
        }
        return out;
    }

    // JSON sidecar persistence with a versioned header line, then one
    // chunk per line.
    void save(const std::string& path) const {
        std::shared_lock lock(mutex_);
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write index: " + path);
        nlohmann::json header = {{"format", "tqa-index"}, {"format_version", 1}, {"dim", dim_},
                                 {"count", entries_.size()}};
        out << header.dump() << "\n";
        for (const auto& e : entries_) {
            nlohmann::json j = {{"doc_id", e.chunk.doc_id},
                                {"start", e.chunk.start},
                                {"end", e.chunk.end},
                                {"text", e.chunk.text},
                                {"vector", e.vector}};
            out << j.dump() << "\n";
        }
    }

    static std::unique_ptr<VectorIndex> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read index: " + path);
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("index file empty: " + path);
        nlohmann::json header = nlohmann::json::parse(line);
        if (header.value("format", "") != "tqa-index" || header.value("format_version", 0) != 1) {
            throw std::runtime_error("index format version mismatch in " + path);
        }
        auto idx = std::make_unique<VectorIndex>(header["dim"].get<std::size_t>());
        std::vector<EmbeddedChunk> chunks;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            EmbeddedChunk e;
            e.chunk = {j["doc_id"].get<std::string>(), j["start"].get<std::size_t>(),
                       j["end"].get<std::size_t>(), j["text"].get<std::string>()};
            e.vector = j["vector"].get<Vector>();
            chunks.push_back(std::move(e));
        }
        idx->add(std::move(chunks));
        return idx;
    }

private:
    std::size_t dim_;
    std::vector<EmbeddedChunk> entries_;
    std::vector<double> norms_;
    mutable std::shared_mutex mutex_;
};

}  // namespace tqa
