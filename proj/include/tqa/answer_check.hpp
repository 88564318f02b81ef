#pragma once
// Rule-based evidence answer check: does the cleaned document mention
// some gold answer? Matching runs over normalize_key'd text and maps
// hits back to character offsets in the original document.

#include <algorithm>
#include <string>
#include <vector>

#include "tqa/core.hpp"
#include "tqa/text.hpp"

namespace tqa {

struct MatchSpan {
    std::size_t start = 0;  // character offsets into the (original) doc
    std::size_t end = 0;
    std::string matched_alias;
    bool operator==(const MatchSpan&) const = default;
};

// Trailing organizational suffixes dropped to form aliases. Compared on
// normalized tokens; extensible via config.
inline const std::vector<std::string>& default_alias_suffixes() {
    static const std::vector<std::string> suffixes = {"f.c.", "fc", "inc.", "ltd.", "cf", "sc"};
    return suffixes;
}

// Gold name plus its suffix-dropped variant, all normalized, deduplicated.
inline std::vector<std::string> answer_aliases(
    const GoldAnswer& gold, const std::vector<std::string>& suffixes = default_alias_suffixes()) {
    std::vector<std::string> out;
    std::string norm = normalize_key(gold.name);
    if (norm.empty()) return out;
    out.push_back(norm);
    auto last_space = norm.rfind(' ');
    if (last_space != std::string::npos) {
        std::string last_tok = norm.substr(last_space + 1);
        if (std::find(suffixes.begin(), suffixes.end(), last_tok) != suffixes.end()) {
            out.push_back(norm.substr(0, last_space));
        }
    }
    return out;
}

namespace detail {

// normalize_key applied to a document, keeping for every normalized
// character the index of the original character it came from.
struct NormalizedDoc {
    std::u32string norm;
    std::vector<std::size_t> origin;  // norm index -> original char index

    static NormalizedDoc build(const std::string& doc) {
        std::u32string cps = utf8_decode(doc);
        // Compose first, tracking origins through composition.
        std::u32string composed;
        std::vector<std::size_t> comp_origin;
        for (std::size_t i = 0; i < cps.size(); ++i) {
            char32_t c = cps[i];
            if (!composed.empty() && c >= 0x300 && c <= 0x36F) {
                if (char32_t merged = tqa::detail::compose(composed.back(), c); merged != 0) {
                    composed.back() = merged;
                    continue;
                }
            }
            composed.push_back(c);
            comp_origin.push_back(i);
        }
        NormalizedDoc nd;
        bool pending_space = false;
        std::size_t space_origin = 0;
        for (std::size_t i = 0; i < composed.size(); ++i) {
            char32_t c = composed[i];
            if (is_space_cp(c)) {
                pending_space = !nd.norm.empty();
                space_origin = comp_origin[i];
                continue;
            }
            if (pending_space) {
                nd.norm.push_back(U' ');
                nd.origin.push_back(space_origin);
                pending_space = false;
            }
            nd.norm.push_back(to_lower_cp(c));
            nd.origin.push_back(comp_origin[i]);
        }
        return nd;
    }
};

}  // namespace detail

// Scans the document for any alias of any gold answer. Spans are
// character offsets into `doc`; slicing doc at a span and normalizing
// yields the matched alias.
inline std::pair<bool, std::vector<MatchSpan>> surface_answer_check(
    const std::string& doc, const std::vector<GoldAnswer>& answers,
    const std::vector<std::string>& suffixes = default_alias_suffixes()) {
    std::vector<MatchSpan> spans;
    if (doc.empty()) return {false, spans};
    auto nd = detail::NormalizedDoc::build(doc);
    std::size_t doc_chars = utf8_length(doc);
    for (const auto& gold : answers) {
        for (const auto& alias : answer_aliases(gold, suffixes)) {
            std::u32string needle = utf8_decode(alias);
            if (needle.empty()) continue;
            std::size_t pos = 0;
            while ((pos = nd.norm.find(needle, pos)) != std::u32string::npos) {
                std::size_t start = nd.origin[pos];
                std::size_t last = pos + needle.size() - 1;
                std::size_t end = (last + 1 < nd.origin.size()) ? nd.origin[last + 1] : doc_chars;
                spans.push_back({start, end, alias});
                pos += 1;
            }
        }
    }
    std::sort(spans.begin(), spans.end(), [](const MatchSpan& a, const MatchSpan& b) {
        return std::tie(a.start, a.end, a.matched_alias) < std::tie(b.start, b.end, b.matched_alias);
    });
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
    return {!spans.empty(), spans};
}

}  // namespace tqa
