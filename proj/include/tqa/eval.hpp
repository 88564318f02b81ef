#pragma once
// Scoring and analysis: string metrics (EM, token F1, set F1), LLM-judge
// consensus voting, zero-shot splits, ablation bucketing, and report
// rendering.

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/benchmark_json.hpp"
#include "tqa/llm.hpp"
#include "tqa/pipelines.hpp"
#include "tqa/prompts.hpp"
#include "tqa/structured.hpp"
#include "tqa/text.hpp"

namespace tqa {

// Answer-string normalization for metrics: lowercase, punctuation
// stripped, whitespace collapsed, leading articles dropped.
inline std::string normalize_answer(const std::string& s) {
    std::u32string cps = nfc_compose(utf8_decode(s));
    std::u32string kept;
    for (char32_t c : cps) {
        if (is_space_cp(c)) {
            kept.push_back(U' ');
        } else if ((c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') ||
                   (c >= U'[' && c <= U'`') || (c >= U'{' && c <= U'~') || c == 0x2019 ||
                   c == 0x2018 || c == 0x201C || c == 0x201D) {
            kept.push_back(U' ');  // punctuation becomes a separator
        } else {
            kept.push_back(to_lower_cp(c));
        }
    }
    auto tokens = split_ws(utf8_encode(kept));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (out.empty() && (tokens[i] == "a" || tokens[i] == "an" || tokens[i] == "the")) continue;
        out.push_back(tokens[i]);
    }
    std::string joined;
    for (const auto& t : out) {
        if (!joined.empty()) joined += ' ';
        joined += t;
    }
    return joined;
}

inline bool exact_match(const std::string& pred, const std::vector<std::string>& gold_names) {
    std::string p = normalize_answer(pred);
    for (const auto& g : gold_names) {
        if (p == normalize_answer(g)) return true;
    }
    return false;
}

// Max over gold names of the token-multiset F1.
inline double token_f1(const std::string& pred, const std::vector<std::string>& gold_names) {
    auto pred_tokens = split_ws(normalize_answer(pred));
    double best = 0.0;
    for (const auto& g : gold_names) {
        auto gold_tokens = split_ws(normalize_answer(g));
        if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
        if (pred_tokens.empty() || gold_tokens.empty()) continue;
        std::map<std::string, int> gold_counts;
        for (const auto& t : gold_tokens) ++gold_counts[t];
        int overlap = 0;
        for (const auto& t : pred_tokens) {
            auto it = gold_counts.find(t);
            if (it != gold_counts.end() && it->second > 0) {
                ++overlap;
                --it->second;
            }
        }
        if (overlap == 0) continue;
        double precision = static_cast<double>(overlap) / pred_tokens.size();
        double recall = static_cast<double>(overlap) / gold_tokens.size();
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

// Splits a list-valued prediction into items: commas, semicolons,
// newlines, and the word "and" all delimit.
inline std::vector<std::string> split_prediction_items(const std::string& pred) {
    std::string work = pred;
    // Lone "and" between items becomes a delimiter.
    static const std::string_view kAnd = " and ";
    std::size_t pos = 0;
    while ((pos = work.find(kAnd, pos)) != std::string::npos) {
        work.replace(pos, kAnd.size(), " , ");
    }
    std::vector<std::string> items;
    std::string cur;
    for (char c : work) {
        if (c == ',' || c == ';' || c == '\n') {
            if (!trim(cur).empty()) items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) items.push_back(trim(cur));
    return items;
}

// F1 over sets of normalized items, greedy one-to-one matching, a pair
// matching iff exact_match holds.
inline double set_f1(const std::vector<std::string>& pred_items,
                     const std::vector<std::string>& gold_names) {
    if (pred_items.empty() && gold_names.empty()) return 1.0;
    if (pred_items.empty() || gold_names.empty()) return 0.0;
    std::vector<bool> gold_used(gold_names.size(), false);
    int matched = 0;
    for (const auto& p : pred_items) {
        for (std::size_t i = 0; i < gold_names.size(); ++i) {
            if (gold_used[i]) continue;
            if (exact_match(p, {gold_names[i]})) {
                gold_used[i] = true;
                ++matched;
                break;
            }
        }
    }
    if (matched == 0) return 0.0;
    double precision = static_cast<double>(matched) / pred_items.size();
    double recall = static_cast<double>(matched) / gold_names.size();
    return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------
// LLM judging and consensus.

struct JudgeVote {
    std::string judge_name;
    std::optional<bool> verdict;  // absent = error vote
    std::string error;
};

inline JudgeVote judge(const std::string& question, const std::vector<std::string>& gold_names,
                       const std::string& pred, LlmBackend& backend,
                       const TemplateSet& templates) {
    JudgeVote vote;
    vote.judge_name = backend.name();
    std::string gold;
    for (const auto& g : gold_names) {
        if (!gold.empty()) gold += "; ";
        gold += g;
    }
    try {
        ChatRequest req = render_prompt(
            templates.get("judge"),
            {{"question", question}, {"gold", gold}, {"prediction", pred}});
        std::string reply = backend.chat(req).text;
        YesNo v = parse_yes_no(reply);
        if (v == YesNo::unparseable) {
            ChatRequest retry = req;
            retry.messages.push_back({"assistant", reply});
            retry.messages.push_back({"user", "Reply with exactly YES or NO."});
            reply = backend.chat(retry).text;
            v = parse_yes_no(reply);
        }
        if (v == YesNo::unparseable) {
            vote.error = "unparseable judge reply: " + reply.substr(0, 80);
        } else {
            vote.verdict = (v == YesNo::yes);
        }
    } catch (const std::runtime_error& e) {
        vote.error = e.what();
    }
    return vote;
}

enum class Consensus { correct, incorrect, disagreement, unevaluated };

inline const char* to_string(Consensus c) {
    switch (c) {
        case Consensus::correct: return "correct";
        case Consensus::incorrect: return "incorrect";
        case Consensus::disagreement: return "disagreement";
        case Consensus::unevaluated: return "unevaluated";
    }
    return "?";
}

// Unanimity rule: all true -> correct, all false -> incorrect, mixed
// booleans -> disagreement, any error vote -> unevaluated.
inline Consensus consensus(const std::vector<JudgeVote>& votes) {
    if (votes.empty()) throw SchemaError("consensus requires at least one vote");
    bool any_error = false, any_true = false, any_false = false;
    for (const auto& v : votes) {
        if (!v.verdict) any_error = true;
        else if (*v.verdict) any_true = true;
        else any_false = true;
    }
    if (any_error) return Consensus::unevaluated;
    if (any_true && any_false) return Consensus::disagreement;
    return any_true ? Consensus::correct : Consensus::incorrect;
}

struct Verdict {
    bool em = false;
    double f1 = 0.0;
    std::optional<double> set_f1;
    std::vector<JudgeVote> judge_votes;
    Consensus consensus = Consensus::unevaluated;
};

struct EvalRecord {
    AnswerRecord record;
    std::vector<GoldAnswer> gold;
    Verdict verdict;
    std::optional<bool> zs_correct;
    int fact_change_count = 0;
    std::size_t doc_length_chars = 0;

    // Whether this prediction counts as correct for accuracy reporting:
    // judged consensus when available, EM otherwise.
    bool counts_correct() const {
        if (verdict.consensus != Consensus::unevaluated) {
            return verdict.consensus == Consensus::correct;
        }
        return verdict.em;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["record"] = record.to_json();
        nlohmann::ordered_json g = nlohmann::ordered_json::array();
        for (const auto& a : gold) g.push_back({{"name", a.name}, {"wikidata_id", a.wikidata_id}});
        j["gold"] = std::move(g);
        j["em"] = verdict.em;
        j["f1"] = verdict.f1;
        j["set_f1"] = verdict.set_f1 ? nlohmann::ordered_json(*verdict.set_f1)
                                     : nlohmann::ordered_json(nullptr);
        nlohmann::ordered_json votes = nlohmann::ordered_json::array();
        for (const auto& v : verdict.judge_votes) {
            votes.push_back({{"judge", v.judge_name},
                             {"verdict", v.verdict ? nlohmann::ordered_json(*v.verdict)
                                                   : nlohmann::ordered_json(nullptr)},
                             {"error", v.error}});
        }
        j["judge_votes"] = std::move(votes);
        j["consensus"] = to_string(verdict.consensus);
        j["zs_correct"] = zs_correct ? nlohmann::ordered_json(*zs_correct)
                                     : nlohmann::ordered_json(nullptr);
        j["fact_change_count"] = fact_change_count;
        j["doc_length_chars"] = doc_length_chars;
        return j;
    }

    static EvalRecord from_json(const nlohmann::ordered_json& j) {
        EvalRecord r;
        r.record = AnswerRecord::from_json(j.at("record"));
        for (const auto& a : j.at("gold")) {
            r.gold.push_back({a.at("name").get<std::string>(), a.value("wikidata_id", "")});
        }
        r.verdict.em = j.at("em").get<bool>();
        r.verdict.f1 = j.at("f1").get<double>();
        if (!j.at("set_f1").is_null()) r.verdict.set_f1 = j["set_f1"].get<double>();
        for (const auto& v : j.value("judge_votes", nlohmann::ordered_json::array())) {
            JudgeVote vote;
            vote.judge_name = v.value("judge", "");
            if (!v.at("verdict").is_null()) vote.verdict = v["verdict"].get<bool>();
            vote.error = v.value("error", "");
            r.verdict.judge_votes.push_back(std::move(vote));
        }
        std::string c = j.value("consensus", "unevaluated");
        r.verdict.consensus = c == "correct"        ? Consensus::correct
                              : c == "incorrect"    ? Consensus::incorrect
                              : c == "disagreement" ? Consensus::disagreement
                                                    : Consensus::unevaluated;
        if (!j.at("zs_correct").is_null()) r.zs_correct = j["zs_correct"].get<bool>();
        r.fact_change_count = j.value("fact_change_count", 0);
        r.doc_length_chars = j.value("doc_length_chars", std::size_t{0});
        return r;
    }
};

inline std::vector<std::string> gold_names(const std::vector<GoldAnswer>& gold) {
    std::vector<std::string> out;
    out.reserve(gold.size());
    for (const auto& g : gold) out.push_back(g.name);
    return out;
}

// Distinct gold answer sets across an event's incident years, minus one.
inline int fact_change_count(const BenchmarkEvent& ev) {
    std::set<std::set<std::string>> distinct;
    for (const auto& [year, inc] : ev.incidents) {
        std::set<std::string> names;
        for (const auto& a : inc.answer) names.insert(normalize_answer(a.name));
        distinct.insert(std::move(names));
    }
    return distinct.empty() ? 0 : static_cast<int>(distinct.size()) - 1;
}

// Scores one answer record against its gold answers. Judges are
// optional; without them consensus stays unevaluated.
inline EvalRecord evaluate_record(const AnswerRecord& rec, const std::vector<GoldAnswer>& gold,
                                  int change_count,
                                  const std::vector<std::shared_ptr<LlmBackend>>& judges = {},
                                  const TemplateSet& templates = TemplateSet::defaults()) {
    EvalRecord er;
    er.record = rec;
    er.gold = gold;
    er.fact_change_count = change_count;
    er.doc_length_chars = rec.evidence_chars;
    auto names = gold_names(gold);
    er.verdict.em = exact_match(rec.prediction, names);
    er.verdict.f1 = token_f1(rec.prediction, names);
    if (gold.size() > 1) {
        er.verdict.set_f1 = set_f1(split_prediction_items(rec.prediction), names);
    }
    if (!judges.empty()) {
        for (const auto& jb : judges) {
            er.verdict.judge_votes.push_back(
                judge(rec.question, names, rec.prediction, *jb, templates));
        }
        er.verdict.consensus = consensus(er.verdict.judge_votes);
    }
    return er;
}

// Table 1/2 partition: join on (event_id, q_year) and split by zero-shot
// correctness. Records without zero-shot coverage are excluded and
// counted.
struct ZeroShotSplit {
    std::vector<EvalRecord> zs_correct;
    std::vector<EvalRecord> zs_incorrect;
    long uncovered = 0;
};

inline ZeroShotSplit split_by_zero_shot(const std::vector<EvalRecord>& eval_records,
                                        const std::vector<EvalRecord>& zs_records) {
    std::map<std::pair<long long, int>, bool> zs_ok;
    for (const auto& z : zs_records) {
        zs_ok[{z.record.event_id, z.record.q_year}] = z.counts_correct();
    }
    ZeroShotSplit split;
    for (EvalRecord er : eval_records) {
        auto it = zs_ok.find({er.record.event_id, er.record.q_year});
        if (it == zs_ok.end()) {
            ++split.uncovered;
            continue;
        }
        er.zs_correct = it->second;
        (it->second ? split.zs_correct : split.zs_incorrect).push_back(std::move(er));
    }
    return split;
}

struct Bucket {
    long n = 0;
    long correct = 0;
    std::optional<double> accuracy() const {
        if (n == 0) return std::nullopt;
        return static_cast<double>(correct) / n;
    }
};

inline std::map<int, Bucket> bucket_by_fact_changes(const std::vector<EvalRecord>& records) {
    std::map<int, Bucket> buckets;
    for (const auto& r : records) {
        auto& b = buckets[r.fact_change_count];
        ++b.n;
        if (r.counts_correct()) ++b.correct;
    }
    return buckets;
}

// Half-open bucketing [edge_i, edge_{i+1}) on evidence length; the last
// edge opens an unbounded final bucket.
inline std::map<std::size_t, Bucket> bucket_by_doc_length(const std::vector<EvalRecord>& records,
                                                          const std::vector<std::size_t>& edges) {
    if (edges.empty()) throw SchemaError("doc-length bucketing needs at least one edge");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] <= edges[i - 1]) throw SchemaError("doc-length edges must be ascending");
    }
    std::map<std::size_t, Bucket> buckets;
    for (std::size_t e : edges) buckets[e];  // report empty buckets too
    for (const auto& r : records) {
        if (r.doc_length_chars < edges.front()) continue;
        std::size_t chosen = edges.front();
        for (std::size_t e : edges) {
            if (r.doc_length_chars >= e) chosen = e;
        }
        auto& b = buckets[chosen];
        ++b.n;
        if (r.counts_correct()) ++b.correct;
    }
    return buckets;
}

// ---------------------------------------------------------------------
// Report rendering: the 6-column layout (ICL closest/latest, RAG
// closest/latest/cumulative, KO) as aligned text and CSV.

struct ReportCell {
    std::optional<double> accuracy;
    long n = 0;
};

struct ReportRow {
    std::string label;
    std::vector<ReportCell> cells;  // one per column below
};

inline const std::vector<std::pair<PipelineKind, std::optional<BundleMode>>>& report_columns() {
    static const std::vector<std::pair<PipelineKind, std::optional<BundleMode>>> cols = {
        {PipelineKind::icl, BundleMode::closest},  {PipelineKind::icl, BundleMode::latest},
        {PipelineKind::rag, BundleMode::closest},  {PipelineKind::rag, BundleMode::latest},
        {PipelineKind::rag, BundleMode::cumulative}, {PipelineKind::ko, std::nullopt},
    };
    return cols;
}

inline const std::vector<std::string>& report_column_names() {
    static const std::vector<std::string> names = {"ICL/closest",    "ICL/latest",
                                                   "RAG/closest",    "RAG/latest",
                                                   "RAG/cumulative", "KO"};
    return names;
}

inline ReportRow report_row(const std::string& label,
                            const std::vector<std::vector<EvalRecord>>& eval_sets) {
    ReportRow row;
    row.label = label;
    for (const auto& [pipeline, mode] : report_columns()) {
        ReportCell cell;
        long correct = 0;
        for (const auto& set : eval_sets) {
            for (const auto& r : set) {
                if (r.record.pipeline != pipeline) continue;
                if (mode && r.record.snapshot_mode != *mode) continue;
                ++cell.n;
                if (r.counts_correct()) ++correct;
            }
        }
        if (cell.n > 0) cell.accuracy = static_cast<double>(correct) / cell.n;
        row.cells.push_back(cell);
    }
    return row;
}

inline std::string render_table_text(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(18) << "Run";
    for (const auto& name : report_column_names()) out << std::right << std::setw(16) << name;
    out << "\n";
    for (const auto& row : rows) {
        out << std::left << std::setw(18) << row.label;
        for (const auto& cell : row.cells) {
            std::ostringstream v;
            if (cell.accuracy) v << std::fixed << std::setprecision(2) << *cell.accuracy;
            else v << "N/A";
            out << std::right << std::setw(16) << v.str();
        }
        out << "\n";
    }
    return out.str();
}

inline std::string render_table_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "run";
    for (const auto& name : report_column_names()) out << "," << name;
    out << "\n";
    for (const auto& row : rows) {
        out << row.label;
        for (const auto& cell : row.cells) {
            out << ",";
            if (cell.accuracy) out << std::fixed << std::setprecision(4) << *cell.accuracy;
            else out << "N/A";
        }
        out << "\n";
    }
    return out.str();
}

template <typename Key>
inline std::string render_bucket_csv(const std::map<Key, Bucket>& buckets) {
    std::ostringstream out;
    out << "bucket,n,accuracy\n";
    for (const auto& [key, b] : buckets) {
        out << key << "," << b.n << ",";
        if (auto acc = b.accuracy()) out << std::fixed << std::setprecision(4) << *acc;
        out << "\n";
    }
    return out.str();
}

inline std::string eval_records_to_jsonl(const std::vector<EvalRecord>& records) {
    std::string out;
    for (const auto& r : records) out += r.to_json().dump() + "\n";
    return out;
}

inline std::vector<EvalRecord> eval_records_from_jsonl(const std::string& content) {
    std::vector<EvalRecord> out;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(EvalRecord::from_json(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            throw SchemaError("eval line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace tqa
