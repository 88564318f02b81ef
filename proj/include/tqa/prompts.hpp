#pragma once
// Prompt templates: task instructions plus few-shot examples, rendered
// deterministically into chat requests. Templates are plain-text assets
// (editable without recompilation); the built-in set below is the
// shipped default and carries a version tag.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tqa/core.hpp"
#include "tqa/llm.hpp"

namespace tqa {

inline constexpr const char* kTemplateVersion = "templates-v1";

class UnboundPlaceholder : public std::runtime_error {
public:
    explicit UnboundPlaceholder(const std::string& name)
        : std::runtime_error("unbound: " + name), placeholder(name) {}
    std::string placeholder;
};

struct PromptTemplate {
    std::string task_id;
    std::string system;
    std::string instructions;
    std::vector<std::pair<std::string, std::string>> few_shot_examples;  // (input, output)
    std::string query_format;  // contains {{placeholders}}

    void validate() const {
        if (few_shot_examples.empty()) {
            throw SchemaError("template '" + task_id + "' needs at least one few-shot example");
        }
    }
};

// Substitutes {{name}} from bindings; throws on any unbound placeholder.
inline std::string render_placeholders(const std::string& format,
                                       const std::map<std::string, std::string>& bindings) {
    std::string out;
    std::size_t pos = 0;
    while (pos < format.size()) {
        std::size_t open = format.find("{{", pos);
        if (open == std::string::npos) {
            out.append(format, pos, format.size() - pos);
            break;
        }
        std::size_t close = format.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(format, pos, format.size() - pos);
            break;
        }
        out.append(format, pos, open - pos);
        std::string name = format.substr(open + 2, close - open - 2);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw UnboundPlaceholder(name);
        out += it->second;
        pos = close + 2;
    }
    return out;
}

// Deterministic assembly: instructions, examples in order, then the
// bound query. Identical inputs yield byte-identical requests.
inline ChatRequest render_prompt(const PromptTemplate& tmpl,
                                 const std::map<std::string, std::string>& bindings) {
    tmpl.validate();
    ChatRequest req;
    req.task_id = tmpl.task_id;
    if (!tmpl.system.empty()) {
        req.messages.push_back({"system", render_placeholders(tmpl.system, bindings)});
    }
    std::string user = render_placeholders(tmpl.instructions, bindings);
    for (const auto& [input, output] : tmpl.few_shot_examples) {
        user += "\n\nExample input:\n" + input + "\nExample output:\n" + output;
    }
    user += "\n\n" + render_placeholders(tmpl.query_format, bindings);
    req.messages.push_back({"user", user});
    return req;
}

// ---------------------------------------------------------------------
// Template set: built-in defaults plus optional per-file overrides.

class TemplateSet {
public:
    static TemplateSet defaults();

    const PromptTemplate& get(const std::string& task_id) const {
        auto it = templates_.find(task_id);
        if (it == templates_.end()) throw SchemaError("unknown template task_id: " + task_id);
        return it->second;
    }

    void put(PromptTemplate t) {
        t.validate();
        templates_[t.task_id] = std::move(t);
    }

    const std::string& version() const { return version_; }

    // Loads <task_id>.txt overrides from a directory. File format:
    // @system / @instructions / @example_input / @example_output /
    // @query section markers, '#' comment lines outside sections.
    void load_overrides(const std::string& dir) {
        namespace fs = std::filesystem;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() != ".txt") continue;
            std::string task_id = entry.path().stem().string();
            if (task_id == "version") {
                std::ifstream in(entry.path());
                std::getline(in, version_);
                version_ = trim(version_);
                continue;
            }
            put(parse_template_file(entry.path().string(), task_id));
        }
    }

    static PromptTemplate parse_template_file(const std::string& path,
                                              const std::string& task_id) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open template: " + path);
        PromptTemplate t;
        t.task_id = task_id;
        std::string line, section;
        std::string* target = nullptr;
        std::string pending_input;
        auto flush_line = [&](const std::string& l) {
            if (!target) return;
            if (!target->empty()) *target += "\n";
            *target += l;
        };
        while (std::getline(in, line)) {
            std::string s = trim(line);
            if (s == "@system") { section = s; target = &t.system; continue; }
            if (s == "@instructions") { section = s; target = &t.instructions; continue; }
            if (s == "@query") { section = s; target = &t.query_format; continue; }
            if (s == "@example_input") {
                section = s;
                pending_input.clear();
                target = &pending_input;
                continue;
            }
            if (s == "@example_output") {
                section = s;
                t.few_shot_examples.emplace_back(pending_input, "");
                target = &t.few_shot_examples.back().second;
                continue;
            }
            if (section.empty() && (s.empty() || s[0] == '#')) continue;
            flush_line(line);
        }
        t.validate();
        return t;
    }

private:
    std::map<std::string, PromptTemplate> templates_;
    std::string version_ = kTemplateVersion;
};

// Output formats the structured parsers expect:
//   quadruple reply: SUBJECT | RELATION | ? | YEAR-or-ALL   (one line)
//   fact reply:      SUBJECT | RELATION | OBJECT | START | END  (one per
//                    line, years four digits or "-")
inline TemplateSet TemplateSet::defaults() {
    TemplateSet set;

    set.put({"question_to_quadruple",
             "You convert natural-language questions into structured quadruples. "
             "Reply with exactly one line and nothing else.",
             "Convert the question into the form:\n"
             "SUBJECT | RELATION | ? | YEAR\n"
             "Use ALL for the year when the question spans all time.",
             {{"What team did LeBron James play for in 2014?",
               "LeBron James | play for | ? | 2014"},
              {"What teams did LeBron James play for?", "LeBron James | play for | ? | ALL"}},
             "Question: {{question}}"});

    set.put({"extract_facts",
             "You extract time-stamped facts about one subject from a document. "
             "Reply with one fact per line and nothing else.",
             "Extract every fact about the subject from the document, one per line, in the form:\n"
             "SUBJECT | RELATION | OBJECT | START | END\n"
             "START and END are four-digit years; use - when a bound is unknown or open.",
             {{"Subject: Luka Modric\nDocument: Luka Modric joined Tottenham Hotspur in 2008.",
               "Luka Modric | play for | Tottenham Hotspur | 2008 | -"}},
             "Subject: {{subject}}\nDocument:\n{{document}}"});

    set.put({"formulate_answer",
             "You answer questions using only the knowledge-base entries provided. "
             "Do not use any other knowledge. If the entries do not answer the question, "
             "reply exactly: unknown",
             "Answer the question from these knowledge-base entries "
             "(SUBJECT | RELATION | OBJECT | START | END):",
             {{"Entries:\nLeBron James | play for | Miami Heat | 2010 | 2014\n"
               "Question: What team did LeBron James play for in 2012?",
               "Miami Heat"}},
             "Entries:\n{{facts}}\nQuestion: {{question}}"});

    set.put({"judge",
             "You are a strict grader. Reply with exactly YES or NO and nothing else.",
             "Decide whether the prediction answers the question correctly given the gold "
             "answers. Reply YES if correct, NO otherwise.",
             {{"Question: What team did LeBron James play for in 2012?\n"
               "Gold answers: Miami Heat\nPrediction: the Miami Heat",
               "YES"}},
             "Question: {{question}}\nGold answers: {{gold}}\nPrediction: {{prediction}}"});

    set.put({"semantic_check",
             "You verify whether a document supports an answer. Reply with exactly YES or NO "
             "and nothing else.",
             "Does the document contain enough information to answer the question with the "
             "given answer? Reply YES or NO.",
             {{"Question: What team did Luka Modric play for in 2010?\nAnswer: Tottenham Hotspur "
               "F.C.\nDocument: Luka Modric joined Tottenham Hotspur in 2008 and stayed for four "
               "seasons.",
               "YES"}},
             "Question: {{question}}\nAnswer: {{answer}}\nDocument:\n{{document}}"});

    set.put({"answer_direct",
             "You answer questions concisely with just the answer entity or list of entities.",
             "Answer the question.",
             {{"What team did LeBron James play for in 2012?", "Miami Heat"}},
             "Question: {{question}}"});

    set.put({"answer_with_context",
             "You answer questions from the reference text. Answer concisely with just the "
             "answer entity or list of entities.",
             "Answer the question using the reference text below.",
             {{"Reference:\n[2013]\nLeBron James plays for the Miami Heat.\n"
               "Question: What team did LeBron James play for in 2012?",
               "Miami Heat"}},
             "Reference:\n{{context}}\nQuestion: {{question}}"});

    set.put({"answer_with_context_strict",
             "You answer questions strictly and only from the reference text; ignore any prior "
             "knowledge. Answer concisely with just the answer entity or list of entities. If "
             "the reference text does not contain the answer, reply exactly: unknown",
             "Answer the question using only the reference text below.",
             {{"Reference:\n[2013]\nLeBron James plays for the Miami Heat.\n"
               "Question: What team did LeBron James play for in 2012?",
               "Miami Heat"}},
             "Reference:\n{{context}}\nQuestion: {{question}}"});

    return set;
}

}  // namespace tqa
