#pragma once
// The four inference schemes (zero-shot, ICL, RAG, KO) as interchangeable
// strategies producing comparable answer records, plus the benchmark
// runner that drives them over a parsed corpus.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/articles.hpp"
#include "tqa/benchmark_json.hpp"
#include "tqa/chunker.hpp"
#include "tqa/cleaning.hpp"
#include "tqa/embedding.hpp"
#include "tqa/index.hpp"
#include "tqa/kb.hpp"
#include "tqa/llm.hpp"
#include "tqa/prompts.hpp"
#include "tqa/snapshot.hpp"
#include "tqa/structured.hpp"

namespace tqa {

enum class PipelineKind { zs, icl, rag, ko };

inline const char* to_string(PipelineKind p) {
    switch (p) {
        case PipelineKind::zs: return "zs";
        case PipelineKind::icl: return "icl";
        case PipelineKind::rag: return "rag";
        case PipelineKind::ko: return "ko";
    }
    return "?";
}

inline PipelineKind pipeline_from_string(std::string_view s) {
    if (s == "zs") return PipelineKind::zs;
    if (s == "icl") return PipelineKind::icl;
    if (s == "rag") return PipelineKind::rag;
    if (s == "ko") return PipelineKind::ko;
    throw SchemaError("unknown pipeline: " + std::string(s));
}

enum class KbScope { per_run, per_question };

struct RunConfig {
    PipelineKind pipeline = PipelineKind::zs;
    BundleMode snapshot_mode = BundleMode::closest;
    RetrievalConfig retrieval;
    bool use_parametric_memory = true;
    KbScope kb_scope = KbScope::per_run;
    std::uint64_t seed = 0;
    std::size_t context_budget_chars = 1 << 20;
    std::size_t extraction_window_chars = 8000;
    bool relation_fallback = false;  // stage 3 relation-only retry on no hits
    bool deterministic = false;      // zero latencies; set for mock runs
};

struct AnswerRecord {
    long long event_id = 0;
    int q_year = 0;
    std::string question;
    std::string prediction;
    std::optional<std::string> failure;  // e.g. quadruple_parse, context_overflow
    PipelineKind pipeline = PipelineKind::zs;
    BundleMode snapshot_mode = BundleMode::closest;
    std::size_t evidence_chars = 0;
    long latency_ms = 0;
    nlohmann::ordered_json trace = nlohmann::ordered_json::object();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["event_id"] = event_id;
        j["q_year"] = q_year;
        j["question"] = question;
        j["prediction"] = prediction;
        j["failure"] = failure ? nlohmann::ordered_json(*failure) : nlohmann::ordered_json(nullptr);
        j["pipeline"] = tqa::to_string(pipeline);
        j["snapshot_mode"] = tqa::to_string(snapshot_mode);
        j["evidence_chars"] = evidence_chars;
        j["latency_ms"] = latency_ms;
        j["trace"] = trace;
        return j;
    }

    static AnswerRecord from_json(const nlohmann::ordered_json& j) {
        AnswerRecord r;
        r.event_id = j.at("event_id").get<long long>();
        r.q_year = j.at("q_year").get<int>();
        r.question = j.at("question").get<std::string>();
        r.prediction = j.at("prediction").get<std::string>();
        if (j.contains("failure") && !j["failure"].is_null()) {
            r.failure = j["failure"].get<std::string>();
        }
        r.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
        r.snapshot_mode = bundle_mode_from_string(j.at("snapshot_mode").get<std::string>());
        r.evidence_chars = j.at("evidence_chars").get<std::size_t>();
        r.latency_ms = j.value("latency_ms", 0L);
        if (j.contains("trace")) r.trace = j["trace"];
        return r;
    }
};

using FactExtractorFn = std::function<std::vector<TemporalFact>(const std::string&)>;

// Everything a pipeline needs besides the question and evidence.
struct PipelineContext {
    std::shared_ptr<LlmBackend> backend;          // chat for all stages
    std::shared_ptr<EmbeddingBackend> embedder;   // rag only
    TemplateSet templates = TemplateSet::defaults();
    RunConfig config;
    FactExtractorFn extractor;  // ko; defaults to LLM extraction when empty

    LlmBackend& chat() const {
        if (!backend) throw SchemaError("no chat backend configured");
        return *backend;
    }
};

class ContextOverflow : public std::runtime_error {
public:
    ContextOverflow(std::size_t prompt_chars, std::size_t budget)
        : std::runtime_error("prompt of " + std::to_string(prompt_chars) +
                             " chars exceeds context budget " + std::to_string(budget)) {}
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(bool deterministic) : deterministic_(deterministic) {
        start_ = std::chrono::steady_clock::now();
    }
    long elapsed_ms() const {
        if (deterministic_) return 0;
        auto d = std::chrono::steady_clock::now() - start_;
        return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(d).count());
    }

private:
    bool deterministic_;
    std::chrono::steady_clock::time_point start_;
};

inline void check_budget(const ChatRequest& req, std::size_t budget) {
    std::size_t total = 0;
    for (const auto& m : req.messages) total += utf8_length(m.content);
    if (total > budget) throw ContextOverflow(total, budget);
}

}  // namespace detail

inline AnswerRecord run_zero_shot(const std::string& question, const PipelineContext& ctx) {
    AnswerRecord rec;
    rec.question = question;
    rec.pipeline = PipelineKind::zs;
    rec.snapshot_mode = ctx.config.snapshot_mode;
    rec.evidence_chars = 0;
    detail::StageTimer timer(ctx.config.deterministic);
    try {
        ChatRequest req = render_prompt(ctx.templates.get("answer_direct"),
                                        {{"question", question}});
        rec.prediction = ctx.chat().chat(req).text;
    } catch (const std::runtime_error& e) {
        rec.failure = "backend_error";
        rec.trace["error"] = e.what();
    }
    rec.latency_ms = timer.elapsed_ms();
    return rec;
}

inline AnswerRecord run_icl(const std::string& question, const EvidenceBundle& bundle,
                            const PipelineContext& ctx) {
    AnswerRecord rec;
    rec.question = question;
    rec.pipeline = PipelineKind::icl;
    rec.snapshot_mode = bundle.mode;
    rec.evidence_chars = bundle.total_chars;
    detail::StageTimer timer(ctx.config.deterministic);
    try {
        const char* tmpl = ctx.config.use_parametric_memory ? "answer_with_context"
                                                            : "answer_with_context_strict";
        ChatRequest req = render_prompt(ctx.templates.get(tmpl),
                                        {{"context", bundle.rendered()}, {"question", question}});
        detail::check_budget(req, ctx.config.context_budget_chars);
        rec.prediction = ctx.chat().chat(req).text;
    } catch (const ContextOverflow& e) {
        rec.failure = "context_overflow";
        rec.trace["error"] = e.what();
    } catch (const std::runtime_error& e) {
        rec.failure = "backend_error";
        rec.trace["error"] = e.what();
    }
    rec.latency_ms = timer.elapsed_ms();
    return rec;
}

inline AnswerRecord run_rag(const std::string& question, const EvidenceBundle& bundle,
                            const PipelineContext& ctx) {
    AnswerRecord rec;
    rec.question = question;
    rec.pipeline = PipelineKind::rag;
    rec.snapshot_mode = bundle.mode;
    rec.evidence_chars = bundle.total_chars;
    detail::StageTimer timer(ctx.config.deterministic);
    try {
        if (!ctx.embedder) throw SchemaError("rag pipeline needs an embedding backend");
        ctx.config.retrieval.validate();
        VectorIndex index(ctx.embedder->dim());
        for (const auto& [ts, text] : bundle.texts) {
            std::vector<Chunk> chunks = split_recursive(text, ctx.config.retrieval, ts);
            std::vector<std::string> texts;
            texts.reserve(chunks.size());
            for (const auto& c : chunks) texts.push_back(c.text);
            std::vector<Vector> vectors = ctx.embedder->embed(texts);
            std::vector<EmbeddedChunk> embedded;
            embedded.reserve(chunks.size());
            for (std::size_t i = 0; i < chunks.size(); ++i) {
                embedded.push_back({std::move(chunks[i]), std::move(vectors[i])});
            }
            index.add(std::move(embedded));
        }
        Vector qv = ctx.embedder->embed({question})[0];
        auto hits = index.query_top_k(qv, ctx.config.retrieval.top_k);
        std::string context;
        nlohmann::ordered_json chunk_trace = nlohmann::ordered_json::array();
        for (const auto& [chunk, score] : hits) {
            if (!context.empty()) context += "\n\n";
            context += "[" + chunk.chunk.doc_id + "]\n" + chunk.chunk.text;
            chunk_trace.push_back({{"doc_id", chunk.chunk.doc_id},
                                   {"start", chunk.chunk.start},
                                   {"score", score}});
        }
        rec.trace["retrieved_chunks"] = std::move(chunk_trace);
        const char* tmpl = ctx.config.use_parametric_memory ? "answer_with_context"
                                                            : "answer_with_context_strict";
        ChatRequest req = render_prompt(ctx.templates.get(tmpl),
                                        {{"context", context}, {"question", question}});
        detail::check_budget(req, ctx.config.context_budget_chars);
        rec.prediction = ctx.chat().chat(req).text;
    } catch (const ContextOverflow& e) {
        rec.failure = "context_overflow";
        rec.trace["error"] = e.what();
    } catch (const ZeroVectorError& e) {
        rec.failure = "zero_vector";
        rec.trace["error"] = e.what();
    } catch (const std::runtime_error& e) {
        rec.failure = "backend_error";
        rec.trace["error"] = e.what();
    }
    rec.latency_ms = timer.elapsed_ms();
    return rec;
}

namespace detail {

// Splits a long text into extraction windows at the configured budget.
inline std::vector<std::string> extraction_windows(const std::string& text, std::size_t budget) {
    std::u32string cps = utf8_decode(text);
    if (cps.size() <= budget) return {text};
    std::vector<std::string> out;
    for (std::size_t pos = 0; pos < cps.size(); pos += budget) {
        out.push_back(utf8_encode(cps.substr(pos, budget)));
    }
    return out;
}

}  // namespace detail

inline AnswerRecord run_ko(const std::string& question, std::optional<int> q_year_hint,
                           const EvidenceBundle& bundle, KnowledgeBase& kb,
                           const PipelineContext& ctx) {
    AnswerRecord rec;
    rec.question = question;
    rec.pipeline = PipelineKind::ko;
    rec.snapshot_mode = bundle.mode;
    rec.evidence_chars = bundle.total_chars;
    detail::StageTimer timer(ctx.config.deterministic);
    try {
        // Stage 1: question -> quadruple.
        QuestionQuadruple quad;
        try {
            quad = question_to_quadruple(question, q_year_hint, ctx.chat(), ctx.templates);
        } catch (const ExtractionError& e) {
            rec.failure = "quadruple_parse";
            rec.trace["raw_reply"] = e.raw_reply;
            rec.latency_ms = timer.elapsed_ms();
            return rec;
        }
        rec.trace["quadruple"] = serialize_quadruple_line(quad);

        // Stage 2: document -> facts -> KB.
        FactExtractorFn extract = ctx.extractor;
        if (!extract) {
            extract = [&](const std::string& text) {
                std::vector<TemporalFact> all;
                for (const auto& window :
                     detail::extraction_windows(text, ctx.config.extraction_window_chars)) {
                    auto ex = extract_facts(window, quad.subject, ctx.chat(), ctx.templates);
                    all.insert(all.end(), ex.facts.begin(), ex.facts.end());
                }
                return all;
            };
        }
        KbDelta delta = kb.ingest_document(bundle, quad.subject, extract);
        rec.trace["kb_delta"] = {{"inserted", delta.facts_inserted},
                                 {"extended", delta.ranges_extended},
                                 {"duplicates", delta.duplicates_merged},
                                 {"mismatched_dropped", delta.subject_mismatches_dropped}};

        // Stage 3: KB query -> answer over exactly the returned facts.
        FactKey key(quad.subject, quad.relation);
        std::vector<TemporalFact> hits = kb.query(key, quad.q_year);
        if (hits.empty() && ctx.config.relation_fallback) {
            for (const auto& k : kb.keys()) {
                if (k.subject_key == key.subject_key) {
                    auto more = kb.query(k, quad.q_year);
                    hits.insert(hits.end(), more.begin(), more.end());
                }
            }
        }
        nlohmann::ordered_json hit_trace = nlohmann::ordered_json::array();
        for (const auto& f : hits) hit_trace.push_back(serialize_fact_line(f));
        rec.trace["kb_hits"] = std::move(hit_trace);
        rec.prediction = formulate_answer(question, hits, ctx.chat(), ctx.templates);
    } catch (const std::runtime_error& e) {
        rec.failure = "backend_error";
        rec.trace["error"] = e.what();
    }
    rec.latency_ms = timer.elapsed_ms();
    return rec;
}

// ---------------------------------------------------------------------
// Benchmark runner.

struct RunResult {
    std::vector<AnswerRecord> records;
    nlohmann::ordered_json manifest;
};

namespace detail {

// One snapshot per incident dump, dated at its map_year; duplicate
// map_years keep the first incident (year-ascending order).
inline std::optional<SnapshotTimeline> timeline_from_event(const BenchmarkEvent& ev,
                                                           const PatternTable& patterns) {
    std::vector<Snapshot> snaps;
    for (const auto& [year_key, inc] : ev.incidents) {  // std::map: ascending keys
        Date d{inc.map_year, 1, 1};
        if (!snaps.empty() && !(snaps.back().capture_date < d)) continue;
        auto [cleaned, report] = clean_document(inc.dump.body_par, patterns);
        if (cleaned.empty()) continue;
        snaps.push_back({d, std::move(cleaned)});
    }
    if (snaps.empty()) return std::nullopt;
    return SnapshotTimeline("event-" + std::to_string(ev.event_id), std::move(snaps));
}

}  // namespace detail

// Iterates incidents in (event_id, year) order, builds evidence per the
// configured snapshot mode, dispatches to the pipeline, and never lets
// one question's failure abort the run.
inline RunResult run_benchmark(
    const std::vector<BenchmarkEvent>& events, PipelineContext& ctx, KnowledgeBase* run_kb,
    const std::map<std::string, std::vector<TimestampedArticle>>* unified_articles = nullptr,
    const PatternTable& patterns = PatternTable::defaults()) {
    RunResult result;
    std::vector<const BenchmarkEvent*> ordered;
    for (const auto& ev : events) ordered.push_back(&ev);
    std::sort(ordered.begin(), ordered.end(),
              [](const BenchmarkEvent* a, const BenchmarkEvent* b) {
                  return a->event_id < b->event_id;
              });

    KnowledgeBase local_kb;
    KnowledgeBase& kb = run_kb ? *run_kb : local_kb;

    for (const BenchmarkEvent* ev : ordered) {
        std::optional<SnapshotTimeline> timeline;
        if (ctx.config.snapshot_mode != BundleMode::unified &&
            ctx.config.pipeline != PipelineKind::zs) {
            timeline = detail::timeline_from_event(*ev, patterns);
        }
        for (const auto& [year_key, inc] : ev->incidents) {
            AnswerRecord rec;
            rec.event_id = ev->event_id;
            rec.q_year = inc.q_year;
            rec.question = inc.question;
            rec.pipeline = ctx.config.pipeline;
            rec.snapshot_mode = ctx.config.snapshot_mode;
            try {
                if (ctx.config.pipeline == PipelineKind::zs) {
                    rec = run_zero_shot(inc.question, ctx);
                } else {
                    EvidenceBundle bundle = [&]() {
                        switch (ctx.config.snapshot_mode) {
                            case BundleMode::closest:
                                if (!timeline) throw SchemaError("no usable snapshots");
                                return closest_bundle(*timeline, inc.q_year);
                            case BundleMode::latest:
                                if (!timeline) throw SchemaError("no usable snapshots");
                                return latest_bundle(*timeline);
                            case BundleMode::cumulative:
                                if (!timeline) throw SchemaError("no usable snapshots");
                                return select_cumulative(*timeline, inc.q_year);
                            case BundleMode::unified: {
                                if (!unified_articles) {
                                    throw SchemaError("unified mode needs an articles corpus");
                                }
                                auto ent = ev->extras.find("entity");
                                if (ent == ev->extras.end()) {
                                    throw SchemaError("event " + std::to_string(ev->event_id) +
                                                      " has no entity for unified mode");
                                }
                                auto it = unified_articles->find(
                                    normalize_key(ent->get<std::string>()));
                                if (it == unified_articles->end() || it->second.empty()) {
                                    throw SchemaError("no articles for entity '" +
                                                      ent->get<std::string>() + "'");
                                }
                                return build_unified_document(it->second);
                            }
                        }
                        throw SchemaError("unreachable snapshot mode");
                    }();
                    switch (ctx.config.pipeline) {
                        case PipelineKind::icl:
                            rec = run_icl(inc.question, bundle, ctx);
                            break;
                        case PipelineKind::rag:
                            rec = run_rag(inc.question, bundle, ctx);
                            break;
                        case PipelineKind::ko: {
                            KnowledgeBase question_kb;
                            KnowledgeBase& target =
                                ctx.config.kb_scope == KbScope::per_question ? question_kb : kb;
                            rec = run_ko(inc.question, inc.q_year, bundle, target, ctx);
                            break;
                        }
                        case PipelineKind::zs:
                            break;  // handled above
                    }
                }
            } catch (const NoFollowingSnapshot& e) {
                rec.failure = "no_following_snapshot";
                rec.trace["error"] = e.what();
            } catch (const std::runtime_error& e) {
                rec.failure = "evidence_error";
                rec.trace["error"] = e.what();
            }
            rec.event_id = ev->event_id;
            rec.q_year = inc.q_year;
            rec.question = inc.question;
            rec.pipeline = ctx.config.pipeline;
            rec.snapshot_mode = ctx.config.snapshot_mode;
            result.records.push_back(std::move(rec));
        }
    }

    nlohmann::ordered_json cfg;
    cfg["pipeline"] = to_string(ctx.config.pipeline);
    cfg["snapshot_mode"] = to_string(ctx.config.snapshot_mode);
    cfg["chunk_size"] = ctx.config.retrieval.chunk_size;
    cfg["overlap"] = ctx.config.retrieval.overlap;
    cfg["top_k"] = ctx.config.retrieval.top_k;
    cfg["dim"] = ctx.config.retrieval.dim;
    cfg["use_parametric_memory"] = ctx.config.use_parametric_memory;
    cfg["kb_scope"] = ctx.config.kb_scope == KbScope::per_run ? "per_run" : "per_question";
    cfg["context_budget_chars"] = ctx.config.context_budget_chars;
    cfg["extraction_window_chars"] = ctx.config.extraction_window_chars;
    cfg["relation_fallback"] = ctx.config.relation_fallback;
    result.manifest["config"] = cfg;
    // FNV-1a: stable across platforms, unlike std::hash.
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : cfg.dump()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char hash_buf[17];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx", static_cast<unsigned long long>(h));
    result.manifest["config_hash"] = std::string(hash_buf);
    result.manifest["template_version"] = ctx.templates.version();
    result.manifest["pattern_version"] = patterns.version;
    result.manifest["seed"] = ctx.config.seed;
    result.manifest["backend"] = ctx.backend ? ctx.backend->name() : "none";
    result.manifest["record_count"] = result.records.size();
    return result;
}

inline std::string records_to_jsonl(const std::vector<AnswerRecord>& records) {
    std::string out;
    for (const auto& r : records) out += r.to_json().dump() + "\n";
    return out;
}

inline std::vector<AnswerRecord> records_from_jsonl(const std::string& content) {
    std::vector<AnswerRecord> out;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(AnswerRecord::from_json(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            throw SchemaError("records line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace tqa
