#pragma once
// Deterministic backends and extractors for offline runs and harness
// verification: an answerer that echoes the KB entries it was given, a
// deliberately recency-confusable answerer, and a rule-based fact
// extractor for synthetic corpora.

#include <regex>
#include <string>
#include <vector>

#include "tqa/llm.hpp"
#include "tqa/structured.hpp"

namespace tqa {

// Replies with the objects of every fact line found in the last user
// message, comma-joined ("unknown" when there are none). Makes KO
// groundedness exactly checkable: the reply can only contain objects
// that were in the KB hits.
class EchoAnswerBackend : public LlmBackend {
public:
    ChatResponse chat(const ChatRequest& request) override {
        request.validate();
        std::string prompt = request.messages.back().content;
        // Few-shot examples earlier in the prompt also contain fact
        // lines; only the query's entry list (after the last marker)
        // counts.
        std::size_t marker = prompt.rfind("Entries:");
        if (marker != std::string::npos) prompt = prompt.substr(marker);
        std::vector<std::string> objects;
        std::istringstream in(prompt);
        std::string line;
        while (std::getline(in, line)) {
            if (auto f = parse_fact_line(trim(line))) {
                if (std::find(objects.begin(), objects.end(), f->object) == objects.end()) {
                    objects.push_back(f->object);
                }
            }
        }
        std::string reply;
        for (const auto& o : objects) {
            if (!reply.empty()) reply += ", ";
            reply += o;
        }
        if (reply.empty()) reply = "unknown";
        return {reply, {}};
    }

    std::string name() const override { return "echo-facts"; }
};

// Answers with whichever candidate string appears first (by position)
// in its prompt. Models the failure mode where an answerer latches onto
// the first plausible answer it sees instead of the temporally correct
// one.
class FirstMentionBackend : public LlmBackend {
public:
    explicit FirstMentionBackend(std::vector<std::string> candidates)
        : candidates_(std::move(candidates)) {}

    ChatResponse chat(const ChatRequest& request) override {
        request.validate();
        const std::string& prompt = request.messages.back().content;
        std::size_t best_pos = std::string::npos;
        std::string best;
        for (const auto& c : candidates_) {
            std::size_t pos = prompt.find(c);
            if (pos != std::string::npos && pos < best_pos) {
                best_pos = pos;
                best = c;
            }
        }
        return {best.empty() ? "unknown" : best, {}};
    }

    std::string name() const override { return "first-mention"; }

private:
    std::vector<std::string> candidates_;
};

// Parses planted sentences of the forms
//   "<subject> played for <object> from <start> to <end>."
//   "<subject> has played for <object> since <start>."
// Deterministic stand-in for the LLM extraction stage on synthetic
// corpora.
inline std::vector<TemporalFact> rule_based_extract(const std::string& text) {
    // The subject class excludes '.' so a lazy match cannot swallow the
    // preceding sentence.
    static const std::regex closed(
        R"(([A-Za-z0-9 '-]+?) played for ([A-Za-z0-9 .'-]+?) from (\d{4}) to (\d{4})\.)");
    static const std::regex open(
        R"(([A-Za-z0-9 '-]+?) has played for ([A-Za-z0-9 .'-]+?) since (\d{4})\.)");
    std::vector<TemporalFact> facts;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), closed);
         it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        facts.emplace_back(trim(m[1].str()), "play for", trim(m[2].str()),
                           std::stoi(m[3].str()), std::stoi(m[4].str()));
    }
    for (auto it = std::sregex_iterator(text.begin(), text.end(), open);
         it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        facts.emplace_back(trim(m[1].str()), "play for", trim(m[2].str()),
                           std::stoi(m[3].str()), std::nullopt);
    }
    return facts;
}

}  // namespace tqa
