#pragma once
// Timestamped news articles and unified-document construction: all
// articles for one entity concatenated in date order, each under a
// [YYYY-MM-DD] header.

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/core.hpp"

namespace tqa {

struct TimestampedArticle {
    Date timestamp;
    std::string entity;
    std::string text;

    TimestampedArticle(Date ts, std::string ent, std::string txt)
        : timestamp(ts), entity(std::move(ent)), text(std::move(txt)) {
        if (text.empty()) throw SchemaError("article text empty");
        if (!timestamp.valid()) throw SchemaError("article timestamp invalid");
    }
};

// Sorted ascending by timestamp; permutation-invariant in its input.
inline EvidenceBundle build_unified_document(std::vector<TimestampedArticle> articles) {
    if (articles.empty()) throw SchemaError("unified document needs at least one article");
    for (const auto& a : articles) {
        if (a.entity != articles.front().entity) {
            throw SchemaError("mixed entities in unified document: '" + articles.front().entity +
                              "' vs '" + a.entity + "'");
        }
    }
    std::stable_sort(articles.begin(), articles.end(),
                     [](const TimestampedArticle& a, const TimestampedArticle& b) {
                         return std::tie(a.timestamp, a.text) < std::tie(b.timestamp, b.text);
                     });
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& a : articles) texts.emplace_back(a.timestamp.to_string(), a.text);
    return EvidenceBundle::make(BundleMode::unified, std::move(texts));
}

// JSON lines, one {entity, timestamp: "YYYY-MM-DD", text} per line.
inline std::vector<TimestampedArticle> parse_articles_jsonl(const std::string& content) {
    std::vector<TimestampedArticle> out;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError("articles line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("entity") || !j.contains("timestamp") || !j.contains("text")) {
            throw SchemaError("articles line " + std::to_string(lineno) +
                              ": need entity, timestamp, text");
        }
        out.emplace_back(Date::parse(j["timestamp"].get<std::string>()),
                         j["entity"].get<std::string>(), j["text"].get<std::string>());
    }
    return out;
}

inline std::map<std::string, std::vector<TimestampedArticle>> group_articles_by_entity(
    std::vector<TimestampedArticle> articles) {
    std::map<std::string, std::vector<TimestampedArticle>> out;
    for (auto& a : articles) out[normalize_key(a.entity)].push_back(std::move(a));
    return out;
}

}  // namespace tqa
