// tqa: temporal question-answering workbench.
// Subcommands: ingest, run, evaluate, report.
// Exit codes: 0 success, 1 internal error, 2 usage/config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tqa/answer_check.hpp"
#include "tqa/articles.hpp"
#include "tqa/benchmark_json.hpp"
#include "tqa/cleaning.hpp"
#include "tqa/eval.hpp"
#include "tqa/http.hpp"
#include "tqa/kb.hpp"
#include "tqa/llm.hpp"
#include "tqa/mock.hpp"
#include "tqa/pipelines.hpp"
#include "tqa/snapshot.hpp"
#include "tqa/structured.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

// Layered configuration: flags > environment > config file > defaults.
// The config file is "key = value" lines; keys mirror the long flags.
struct LayeredConfig {
    std::map<std::string, std::string> file_values;

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot read config file: " + path);
        std::string line;
        while (std::getline(in, line)) {
            std::string s = tqa::trim(line);
            if (s.empty() || s[0] == '#') continue;
            auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("config: bad line '" + line + "'");
            file_values[tqa::trim(s.substr(0, eq))] = tqa::trim(s.substr(eq + 1));
        }
    }

    // env_name: e.g. TQA_ENDPOINT. Credentials must come from env only.
    std::string resolve(const std::string& flag_value, const char* env_name,
                        const std::string& file_key, const std::string& fallback) const {
        if (!flag_value.empty()) return flag_value;
        if (env_name) {
            if (const char* v = std::getenv(env_name); v && *v) return v;
        }
        if (auto it = file_values.find(file_key); it != file_values.end()) return it->second;
        return fallback;
    }
};

std::shared_ptr<tqa::LlmBackend> make_backend(const std::string& mock_script,
                                              const std::string& endpoint,
                                              const std::string& model) {
    if (!mock_script.empty()) return tqa::MockBackend::from_script_file(mock_script);
    if (!endpoint.empty()) {
        return std::make_shared<tqa::RemoteChatBackend>(tqa::make_http_post(endpoint), model);
    }
    return nullptr;
}

// ------------------------------------------------------------------ ingest

int cmd_ingest(const std::string& benchmark_path, const std::string& out_dir,
               bool check_answers, const std::string& semantic_mock,
               const std::string& patterns_path) {
    tqa::PatternTable patterns =
        patterns_path.empty() ? tqa::PatternTable::defaults() : tqa::PatternTable::load(patterns_path);
    auto events = tqa::parse_benchmark(read_file(benchmark_path));

    std::shared_ptr<tqa::LlmBackend> semantic_judge;
    if (!semantic_mock.empty()) semantic_judge = tqa::MockBackend::from_script_file(semantic_mock);
    tqa::TemplateSet templates = tqa::TemplateSet::defaults();

    fs::create_directories(out_dir);
    std::ofstream reports(fs::path(out_dir) / "clean_reports.jsonl");
    std::ofstream manifest;
    if (check_answers) manifest.open(fs::path(out_dir) / "answer_check.jsonl");

    long total = 0, passed = 0;
    for (const auto& ev : events) {
        for (const auto& [year, inc] : ev.incidents) {
            auto [cleaned, report] = tqa::clean_document(inc.dump.body_par, patterns);
            std::string doc_name = "event" + std::to_string(ev.event_id) + "_" + year + ".txt";
            write_file((fs::path(out_dir) / doc_name).string(), cleaned);
            nlohmann::ordered_json rj = {
                {"doc", doc_name},
                {"removed_structured_blocks", report.removed_structured_blocks},
                {"removed_artifact_count", report.removed_artifact_count},
                {"input_chars", report.input_chars},
                {"output_chars", report.output_chars},
                {"checked_after_cleaning", true},
            };
            reports << rj.dump() << "\n";
            ++total;
            if (check_answers) {
                auto [ok, spans] = tqa::surface_answer_check(cleaned, inc.answer);
                nlohmann::ordered_json mj = {{"doc", doc_name}, {"surface_pass", ok},
                                             {"span_count", spans.size()}};
                if (semantic_judge) {
                    auto verdict = tqa::semantic_answer_check(cleaned, inc.question, inc.answer,
                                                              *semantic_judge, templates);
                    mj["semantic"] = verdict == tqa::SemanticVerdict::supported     ? "supported"
                                     : verdict == tqa::SemanticVerdict::unsupported ? "unsupported"
                                                                                    : "judge_error";
                    ok = ok && verdict == tqa::SemanticVerdict::supported;
                }
                mj["pass"] = ok;
                manifest << mj.dump() << "\n";
                if (ok) ++passed;
            }
        }
    }
    std::cout << "ingested " << total << " documents into " << out_dir << "\n";
    if (check_answers) {
        std::cout << "answer check: " << passed << "/" << total << " passed\n";
        if (passed == 0) std::cerr << "warning: no documents passed the answer check\n";
    }
    return kExitOk;
}

// --------------------------------------------------------------------- run

struct RunFlags {
    std::string benchmark_path, articles_path, out_path, manifest_path;
    std::string pipeline = "zs", snapshot_mode = "closest";
    std::string mock_script, endpoint, model, config_path, templates_dir, patterns_path;
    std::string kb_out, kb_in, kb_scope = "per_run";
    std::size_t chunk_size = 500, overlap = 50, top_k = 12, dim = 512;
    std::size_t context_budget = 1 << 20, extraction_window = 8000;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool no_parametric_memory = false;
    bool relation_fallback = false;
};

int cmd_run(const RunFlags& flags) {
    LayeredConfig layered;
    if (!flags.config_path.empty()) layered.load(flags.config_path);
    std::string endpoint = layered.resolve(flags.endpoint, "TQA_ENDPOINT", "endpoint", "");
    std::string model = layered.resolve(flags.model, "TQA_MODEL", "model", "default");

    tqa::PipelineContext ctx;
    ctx.config.pipeline = tqa::pipeline_from_string(flags.pipeline);
    ctx.config.snapshot_mode = tqa::bundle_mode_from_string(flags.snapshot_mode);
    ctx.config.retrieval = {flags.chunk_size, flags.overlap, flags.top_k, flags.dim};
    ctx.config.retrieval.validate();
    ctx.config.use_parametric_memory = !flags.no_parametric_memory;
    ctx.config.kb_scope =
        flags.kb_scope == "per_question" ? tqa::KbScope::per_question : tqa::KbScope::per_run;
    ctx.config.seed = flags.seed;
    ctx.config.context_budget_chars = flags.context_budget;
    ctx.config.extraction_window_chars = flags.extraction_window;
    ctx.config.relation_fallback = flags.relation_fallback;
    ctx.config.deterministic = !flags.mock_script.empty();
    ctx.embedder = std::make_shared<tqa::HashingEmbedder>(flags.dim, flags.seed);
    if (!flags.templates_dir.empty()) ctx.templates.load_overrides(flags.templates_dir);

    ctx.backend = make_backend(flags.mock_script, endpoint, model);
    if (!ctx.backend) {
        throw UsageError("no backend: provide --mock-script or --endpoint (or TQA_ENDPOINT)");
    }

    auto events = tqa::parse_benchmark(read_file(flags.benchmark_path));

    std::map<std::string, std::vector<tqa::TimestampedArticle>> articles;
    const std::map<std::string, std::vector<tqa::TimestampedArticle>>* articles_ptr = nullptr;
    if (ctx.config.snapshot_mode == tqa::BundleMode::unified) {
        if (flags.articles_path.empty()) {
            throw UsageError("--snapshot-mode unified requires --articles (Unified Clark corpus)");
        }
        articles = tqa::group_articles_by_entity(
            tqa::parse_articles_jsonl(read_file(flags.articles_path)));
        articles_ptr = &articles;
    } else if (!flags.articles_path.empty()) {
        throw UsageError("--articles is only valid with --snapshot-mode unified");
    }

    tqa::PatternTable patterns = flags.patterns_path.empty()
                                     ? tqa::PatternTable::defaults()
                                     : tqa::PatternTable::load(flags.patterns_path);

    std::unique_ptr<tqa::KnowledgeBase> kb;
    if (!flags.kb_in.empty()) kb = tqa::KnowledgeBase::load(flags.kb_in);
    else kb = std::make_unique<tqa::KnowledgeBase>();

    tqa::RunResult result = tqa::run_benchmark(events, ctx, kb.get(), articles_ptr, patterns);

    write_file(flags.out_path, tqa::records_to_jsonl(result.records));
    if (!flags.manifest_path.empty()) {
        result.manifest["records_file"] = fs::path(flags.out_path).filename().string();
        write_file(flags.manifest_path, result.manifest.dump(2) + "\n");
    }
    if (!flags.kb_out.empty()) {
        kb->save(flags.kb_out, ctx.config.deterministic ? "" : "now");
    }

    long failures = 0;
    for (const auto& r : result.records) {
        if (r.failure) ++failures;
    }
    std::cout << result.records.size() << " records (" << failures << " failed) -> "
              << flags.out_path << "\n";
    return kExitOk;  // per-question failures are reported, not fatal
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& records_path, const std::string& benchmark_path,
                 const std::string& out_path, const std::vector<std::string>& judge_mocks,
                 const std::vector<std::string>& judge_endpoints, unsigned jobs) {
    auto records = tqa::records_from_jsonl(read_file(records_path));
    auto events = tqa::parse_benchmark(read_file(benchmark_path));

    std::map<std::pair<long long, int>, const tqa::Incident*> gold_index;
    std::map<long long, int> change_counts;
    for (const auto& ev : events) {
        change_counts[ev.event_id] = tqa::fact_change_count(ev);
        for (const auto& [year, inc] : ev.incidents) {
            gold_index[{ev.event_id, inc.q_year}] = &inc;
        }
    }

    std::vector<std::string> unmatched;
    for (const auto& r : records) {
        if (!gold_index.count({r.event_id, r.q_year})) {
            unmatched.push_back("(" + std::to_string(r.event_id) + ", " +
                                std::to_string(r.q_year) + ")");
        }
    }
    if (!unmatched.empty()) {
        std::string list;
        for (const auto& u : unmatched) list += (list.empty() ? "" : ", ") + u;
        throw UsageError("records not present in benchmark: " + list);
    }

    std::vector<std::shared_ptr<tqa::LlmBackend>> judges;
    for (const auto& m : judge_mocks) judges.push_back(tqa::MockBackend::from_script_file(m));
    for (const auto& e : judge_endpoints) {
        std::string model = "judge";
        std::string url = e;
        if (auto at = e.find('@'); at != std::string::npos) {  // model@url
            model = e.substr(0, at);
            url = e.substr(at + 1);
        }
        judges.push_back(
            std::make_shared<tqa::RemoteChatBackend>(tqa::make_http_post(url), model));
    }

    tqa::TemplateSet templates = tqa::TemplateSet::defaults();
    std::vector<tqa::EvalRecord> evals;
    evals.reserve(records.size());
    for (const auto& r : records) {
        const tqa::Incident* inc = gold_index[{r.event_id, r.q_year}];
        evals.push_back(tqa::evaluate_record(r, inc->answer, change_counts[r.event_id], judges,
                                             templates));
    }
    write_file(out_path, tqa::eval_records_to_jsonl(evals));

    long em = 0;
    for (const auto& e : evals) em += e.verdict.em ? 1 : 0;
    std::cout << evals.size() << " evaluated, EM " << em << "/" << evals.size() << " -> "
              << out_path << "\n";
    (void)jobs;
    return kExitOk;
}

// ------------------------------------------------------------------ report

int cmd_report(const std::vector<std::string>& eval_specs, const std::string& out_dir,
               const std::string& zs_eval_path, bool split_zs,
               std::vector<std::size_t> length_edges) {
    if (split_zs && zs_eval_path.empty()) {
        throw UsageError("--split-zero-shot requires --zs-eval <file>");
    }
    if (length_edges.empty()) length_edges = {0, 1000, 5000, 20000};

    // Each spec is "label=path" or a bare path (label = file stem).
    std::vector<std::pair<std::string, std::vector<tqa::EvalRecord>>> sets;
    for (const auto& spec : eval_specs) {
        std::string label, path;
        if (auto eq = spec.find('='); eq != std::string::npos) {
            label = spec.substr(0, eq);
            path = spec.substr(eq + 1);
        } else {
            path = spec;
            label = fs::path(spec).stem().string();
        }
        sets.emplace_back(label, tqa::eval_records_from_jsonl(read_file(path)));
    }

    fs::create_directories(out_dir);

    auto render_sets =
        [&](const std::vector<std::pair<std::string, std::vector<tqa::EvalRecord>>>& input,
            const std::string& stem) {
            std::vector<tqa::ReportRow> rows;
            for (const auto& [label, recs] : input) {
                rows.push_back(tqa::report_row(label, {recs}));
            }
            write_file((fs::path(out_dir) / (stem + ".txt")).string(),
                       tqa::render_table_text(rows));
            write_file((fs::path(out_dir) / (stem + ".csv")).string(),
                       tqa::render_table_csv(rows));
        };

    if (split_zs) {
        auto zs_records = tqa::eval_records_from_jsonl(read_file(zs_eval_path));
        std::vector<std::pair<std::string, std::vector<tqa::EvalRecord>>> correct_sets,
            incorrect_sets;
        long uncovered = 0;
        for (const auto& [label, recs] : sets) {
            auto split = tqa::split_by_zero_shot(recs, zs_records);
            uncovered += split.uncovered;
            correct_sets.emplace_back(label, std::move(split.zs_correct));
            incorrect_sets.emplace_back(label, std::move(split.zs_incorrect));
        }
        render_sets(correct_sets, "table_zs_correct");
        render_sets(incorrect_sets, "table_zs_incorrect");
        if (uncovered > 0) {
            std::cerr << "warning: " << uncovered
                      << " records lacked zero-shot coverage and were excluded\n";
        }
    } else {
        render_sets(sets, "table");
    }

    std::vector<tqa::EvalRecord> all;
    for (const auto& [label, recs] : sets) all.insert(all.end(), recs.begin(), recs.end());
    write_file((fs::path(out_dir) / "fact_changes.csv").string(),
               tqa::render_bucket_csv(tqa::bucket_by_fact_changes(all)));
    write_file((fs::path(out_dir) / "doc_length.csv").string(),
               tqa::render_bucket_csv(tqa::bucket_by_doc_length(all, length_edges)));

    std::cout << "report written to " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tqa: temporal question answering over evolving corpora"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Clean page dumps into LLM-ready text");
    std::string in_benchmark, in_out_dir, in_semantic_mock, in_patterns;
    bool in_check = false;
    ingest->add_option("--benchmark", in_benchmark, "Benchmark JSON file")->required();
    ingest->add_option("--out-dir", in_out_dir, "Output directory for cleaned documents")
        ->required();
    ingest->add_flag("--check-answers", in_check, "Run the surface answer check");
    ingest->add_option("--semantic-judge-mock", in_semantic_mock,
                       "Mock script for the semantic answer check (optional)");
    ingest->add_option("--patterns", in_patterns, "Pattern table file (default: built-in)");

    // run
    auto* run = app.add_subcommand("run", "Run a pipeline over a benchmark");
    RunFlags rf;
    run->add_option("--benchmark", rf.benchmark_path, "Benchmark JSON file")->required();
    run->add_option("--articles", rf.articles_path, "Articles JSONL (unified mode only)");
    run->add_option("--out", rf.out_path, "Records output file (JSONL)")->required();
    run->add_option("--manifest", rf.manifest_path, "Run manifest output file (JSON)");
    run->add_option("--pipeline", rf.pipeline, "Pipeline: zs | icl | rag | ko")
        ->check(CLI::IsMember({"zs", "icl", "rag", "ko"}));
    run->add_option("--snapshot-mode", rf.snapshot_mode,
                    "Evidence mode: closest | latest | cumulative | unified")
        ->check(CLI::IsMember({"closest", "latest", "cumulative", "unified"}));
    run->add_option("--mock-script", rf.mock_script, "Scripted mock backend (JSONL)");
    run->add_option("--endpoint", rf.endpoint, "Chat endpoint base URL (or TQA_ENDPOINT)");
    run->add_option("--model", rf.model, "Model name (or TQA_MODEL)");
    run->add_option("--config", rf.config_path, "Config file (key = value)");
    run->add_option("--templates", rf.templates_dir, "Template override directory");
    run->add_option("--patterns", rf.patterns_path, "Pattern table file");
    run->add_option("--chunk-size", rf.chunk_size, "RAG chunk size in characters");
    run->add_option("--overlap", rf.overlap, "RAG chunk overlap in characters");
    run->add_option("--top-k", rf.top_k, "RAG retrieved chunk count");
    run->add_option("--dim", rf.dim, "Embedding dimensionality");
    run->add_option("--context-budget", rf.context_budget, "Prompt budget in characters");
    run->add_option("--extraction-window", rf.extraction_window,
                    "KO fact-extraction window in characters");
    run->add_option("--kb-scope", rf.kb_scope, "KB lifetime: per_run | per_question")
        ->check(CLI::IsMember({"per_run", "per_question"}));
    run->add_option("--kb-in", rf.kb_in, "Load an existing KB file before the run");
    run->add_option("--kb-out", rf.kb_out, "Save the KB after the run");
    run->add_option("--seed", rf.seed, "Seed for embedder hashing and tie-breaks");
    run->add_option("--jobs", rf.jobs, "Worker pool size (questions run in order regardless)");
    run->add_flag("--no-parametric-memory", rf.no_parametric_memory,
                  "Instruct models to answer only from the provided text");
    run->add_flag("--relation-fallback", rf.relation_fallback,
                  "KO stage 3: fall back to subject-only lookup on no hits");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score records against gold answers");
    std::string ev_records, ev_benchmark, ev_out;
    std::vector<std::string> ev_judge_mocks, ev_judge_endpoints;
    unsigned ev_jobs = 1;
    evaluate->add_option("--records", ev_records, "Records JSONL from 'run'")->required();
    evaluate->add_option("--benchmark", ev_benchmark, "Benchmark JSON with gold answers")
        ->required();
    evaluate->add_option("--out", ev_out, "Eval records output file (JSONL)")->required();
    evaluate->add_option("--judge-mock", ev_judge_mocks,
                         "Mock judge script (repeat for multiple judges)");
    evaluate->add_option("--judge-endpoint", ev_judge_endpoints,
                         "Judge endpoint as model@url (repeatable)");
    evaluate->add_option("--jobs", ev_jobs, "Worker pool size for judge calls");

    // report
    auto* report = app.add_subcommand("report", "Render tables and figure data from eval files");
    std::vector<std::string> rp_evals;
    std::string rp_out_dir, rp_zs_eval;
    bool rp_split = false;
    std::vector<std::size_t> rp_edges;
    report->add_option("--eval", rp_evals, "Eval file, optionally label=path (repeatable)")
        ->required();
    report->add_option("--out-dir", rp_out_dir, "Report output directory")->required();
    report->add_flag("--split-zero-shot", rp_split,
                     "Partition into zero-shot correct/incorrect tables");
    report->add_option("--zs-eval", rp_zs_eval, "Zero-shot eval file for the split");
    report->add_option("--length-edges", rp_edges,
                       "Document-length bucket edges (default 0 1000 5000 20000)");

    try {
        app.parse(argc, argv);
        if (*ingest) return cmd_ingest(in_benchmark, in_out_dir, in_check, in_semantic_mock,
                                       in_patterns);
        if (*run) return cmd_run(rf);
        if (*evaluate) return cmd_evaluate(ev_records, ev_benchmark, ev_out, ev_judge_mocks,
                                           ev_judge_endpoints, ev_jobs);
        if (*report) return cmd_report(rp_evals, rp_out_dir, rp_zs_eval, rp_split, rp_edges);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tqa::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tqa::ParseError& e) {
        std::cerr << "error: parse failure at byte " << e.byte_offset << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
