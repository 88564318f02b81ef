#pragma once
// Structured-output protocol between the agent and its backends:
// pipe-delimited quadruple and fact lines, plus the LLM-backed
// operations built on them (question -> quadruple, document -> facts,
// facts -> answer, YES/NO verification).

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tqa/core.hpp"
#include "tqa/llm.hpp"
#include "tqa/prompts.hpp"
#include "tqa/text.hpp"

namespace tqa {

class ExtractionError : public std::runtime_error {
public:
    ExtractionError(std::string msg, std::string raw_reply)
        : std::runtime_error(std::move(msg)), raw_reply(std::move(raw_reply)) {}
    std::string raw_reply;
};

namespace detail {

inline std::vector<std::string> split_pipes(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t bar = line.find('|', pos);
        if (bar == std::string::npos) {
            fields.push_back(trim(line.substr(pos)));
            break;
        }
        fields.push_back(trim(line.substr(pos, bar - pos)));
        pos = bar + 1;
    }
    return fields;
}

inline std::optional<int> parse_year_field(const std::string& s) {
    if (s == "-" || s.empty()) return std::nullopt;
    if (s.size() != 4 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw SchemaError("bad year field: '" + s + "'");
    }
    return std::stoi(s);
}

}  // namespace detail

// "SUBJECT | RELATION | OBJECT | START | END", years four-digit or "-".
inline std::string serialize_fact_line(const TemporalFact& f) {
    auto year = [](const std::optional<int>& y) {
        return y ? std::to_string(*y) : std::string("-");
    };
    return f.subject + " | " + f.relation + " | " + f.object + " | " + year(f.start_year) +
           " | " + year(f.end_year);
}

inline std::optional<TemporalFact> parse_fact_line(const std::string& line) {
    auto fields = detail::split_pipes(line);
    if (fields.size() != 5) return std::nullopt;
    try {
        return TemporalFact(fields[0], fields[1], fields[2],
                            detail::parse_year_field(fields[3]),
                            detail::parse_year_field(fields[4]));
    } catch (const SchemaError&) {
        return std::nullopt;
    }
}

// "SUBJECT | RELATION | ? | YEAR-or-ALL"
inline std::optional<QuestionQuadruple> parse_quadruple_line(const std::string& line) {
    auto fields = detail::split_pipes(line);
    if (fields.size() != 4) return std::nullopt;
    if (fields[0].empty() || fields[1].empty()) return std::nullopt;
    std::optional<int> year;
    std::string y = fields[3];
    std::transform(y.begin(), y.end(), y.begin(), [](unsigned char c) { return std::toupper(c); });
    if (y != "ALL" && !y.empty()) {
        try {
            year = detail::parse_year_field(fields[3]);
        } catch (const SchemaError&) {
            return std::nullopt;
        }
    }
    return QuestionQuadruple(fields[0], fields[1], year);
}

inline std::string serialize_quadruple_line(const QuestionQuadruple& q) {
    return q.subject + " | " + q.relation + " | ? | " +
           (q.q_year ? std::to_string(*q.q_year) : std::string("ALL"));
}

// Finds the first line of the reply that parses as a quadruple.
inline std::optional<QuestionQuadruple> scan_for_quadruple(const std::string& reply) {
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
        if (auto q = parse_quadruple_line(trim(line))) return q;
    }
    return std::nullopt;
}

// Stage 1: question -> structured quadruple, with one format-reminder
// re-ask before giving up.
inline QuestionQuadruple question_to_quadruple(const std::string& question,
                                               std::optional<int> q_year_hint,
                                               LlmBackend& backend, const TemplateSet& templates) {
    if (question.empty()) throw SchemaError("question must be non-empty");
    ChatRequest req = render_prompt(templates.get("question_to_quadruple"),
                                    {{"question", question}});
    std::string reply = backend.chat(req).text;
    auto parsed = scan_for_quadruple(reply);
    if (!parsed) {
        ChatRequest retry = req;
        retry.messages.push_back({"assistant", reply});
        retry.messages.push_back(
            {"user", "That was not the required format. Reply with exactly one line: "
                     "SUBJECT | RELATION | ? | YEAR (or ALL)."});
        reply = backend.chat(retry).text;
        parsed = scan_for_quadruple(reply);
        if (!parsed) throw ExtractionError("could not parse quadruple reply", reply);
    }
    QuestionQuadruple q = *parsed;
    if (!q.q_year && q_year_hint) q.q_year = q_year_hint;
    return q;
}

struct FactExtraction {
    std::vector<TemporalFact> facts;
    long skipped_lines = 0;
    std::string raw_reply;
};

// Stage 2 primitive: one extraction request over one document window.
// Malformed lines are skipped and counted, never fatal.
inline FactExtraction extract_facts(const std::string& document_text, const std::string& subject,
                                    LlmBackend& backend, const TemplateSet& templates) {
    if (document_text.empty()) throw SchemaError("document must be non-empty");
    ChatRequest req = render_prompt(templates.get("extract_facts"),
                                    {{"subject", subject}, {"document", document_text}});
    FactExtraction out;
    out.raw_reply = backend.chat(req).text;
    std::istringstream in(out.raw_reply);
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty()) continue;
        if (auto f = parse_fact_line(s)) {
            out.facts.push_back(std::move(*f));
        } else {
            ++out.skipped_lines;
        }
    }
    return out;
}

inline std::string serialize_fact_list(const std::vector<TemporalFact>& facts) {
    std::string out;
    for (const auto& f : facts) {
        if (!out.empty()) out += "\n";
        out += serialize_fact_line(f);
    }
    return out;
}

// Stage 3: answer from exactly the retrieved entries. With no entries
// the template instructs the model to answer "unknown".
inline std::string formulate_answer(const std::string& question,
                                    const std::vector<TemporalFact>& facts, LlmBackend& backend,
                                    const TemplateSet& templates) {
    std::string fact_block = facts.empty() ? "(none)" : serialize_fact_list(facts);
    ChatRequest req = render_prompt(templates.get("formulate_answer"),
                                    {{"facts", fact_block}, {"question", question}});
    return backend.chat(req).text;
}

enum class YesNo { yes, no, unparseable };

// Maps a constrained YES/NO reply; anything else is unparseable.
inline YesNo parse_yes_no(const std::string& reply) {
    std::string s = normalize_key(reply);
    while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
    if (s == "yes") return YesNo::yes;
    if (s == "no") return YesNo::no;
    return YesNo::unparseable;
}

enum class SemanticVerdict { supported, unsupported, judge_error };

// LLM verification that a document supports an answer. Transport
// failures and unparseable replies surface as judge_error, never as
// unsupported.
inline SemanticVerdict semantic_answer_check(const std::string& doc, const std::string& question,
                                             const std::vector<GoldAnswer>& answers,
                                             LlmBackend& judge, const TemplateSet& templates) {
    std::string gold;
    for (const auto& a : answers) {
        if (!gold.empty()) gold += "; ";
        gold += a.name;
    }
    try {
        ChatRequest req = render_prompt(
            templates.get("semantic_check"),
            {{"question", question}, {"answer", gold}, {"document", doc}});
        switch (parse_yes_no(judge.chat(req).text)) {
            case YesNo::yes: return SemanticVerdict::supported;
            case YesNo::no: return SemanticVerdict::unsupported;
            case YesNo::unparseable: return SemanticVerdict::judge_error;
        }
    } catch (const std::runtime_error&) {
        return SemanticVerdict::judge_error;
    }
    return SemanticVerdict::judge_error;
}

}  // namespace tqa
