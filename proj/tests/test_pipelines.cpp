#include <catch2/catch_amalgamated.hpp>

#include "tqa/mock.hpp"
#include "tqa/pipelines.hpp"

using namespace tqa;

namespace {

PipelineContext mock_context(std::shared_ptr<LlmBackend> backend, PipelineKind pipeline) {
    PipelineContext ctx;
    ctx.backend = std::move(backend);
    ctx.embedder = std::make_shared<HashingEmbedder>(512, 0);
    ctx.config.pipeline = pipeline;
    ctx.config.deterministic = true;
    return ctx;
}

Incident make_incident(int q_year, int map_year, const std::string& question,
                       const std::string& answer, const std::string& body) {
    Incident inc;
    inc.q_year = q_year;
    inc.map_year = map_year;
    inc.question = question;
    inc.answer = {{answer, "Q0"}};
    inc.dump.url = "u";
    inc.dump.body_par = body;
    return inc;
}

}  // namespace

TEST_CASE("zero-shot answers without evidence") {
    auto mock = std::make_shared<MockBackend>();
    mock->push("answer_direct", "Miami Heat");
    auto ctx = mock_context(mock, PipelineKind::zs);
    AnswerRecord rec = run_zero_shot("Which team in 2012?", ctx);
    CHECK(rec.prediction == "Miami Heat");
    CHECK(rec.evidence_chars == 0);
    CHECK(rec.latency_ms == 0);
    CHECK_FALSE(rec.failure.has_value());
}

TEST_CASE("icl uses the strict template when parametric memory is disabled") {
    auto mock = std::make_shared<MockBackend>();
    mock->push("answer_with_context_strict", "strict answer");
    auto ctx = mock_context(mock, PipelineKind::icl);
    ctx.config.use_parametric_memory = false;
    auto bundle = EvidenceBundle::make(BundleMode::latest, {{"2015", "Some reference text."}});
    AnswerRecord rec = run_icl("q?", bundle, ctx);
    CHECK(rec.prediction == "strict answer");  // only the strict task had a reply
    CHECK(rec.evidence_chars == bundle.total_chars);
}

TEST_CASE("icl reports context overflow as a failure record") {
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{"never used"});
    auto ctx = mock_context(mock, PipelineKind::icl);
    ctx.config.context_budget_chars = 50;
    auto bundle =
        EvidenceBundle::make(BundleMode::latest, {{"2015", std::string(500, 'x')}});
    AnswerRecord rec = run_icl("q?", bundle, ctx);
    REQUIRE(rec.failure.has_value());
    CHECK(*rec.failure == "context_overflow");
    CHECK(rec.prediction.empty());
}

TEST_CASE("rag retrieves the planted chunk and records a trace") {
    auto mock = std::make_shared<MockBackend>();
    mock->push("answer_with_context", "Bluejays");
    auto ctx = mock_context(mock, PipelineKind::rag);
    ctx.config.retrieval.top_k = 2;
    ctx.config.retrieval.chunk_size = 60;
    ctx.config.retrieval.overlap = 10;
    std::string filler =
        "Unrelated filler sentence about weather patterns.\n\n"
        "Another filler paragraph about cooking recipes.\n\n";
    std::string text = filler + "Alice Smith has played for Bluejays since 2012.\n\n" + filler;
    auto bundle = EvidenceBundle::make(BundleMode::closest, {{"2013", text}});
    AnswerRecord rec = run_rag("Which team did Alice Smith play for in 2012?", bundle, ctx);
    CHECK(rec.prediction == "Bluejays");
    REQUIRE(rec.trace.contains("retrieved_chunks"));
    CHECK(rec.trace["retrieved_chunks"].size() == 2);
    CHECK_FALSE(rec.failure.has_value());
}

TEST_CASE("ko runs three scripted stages and answers from KB hits") {
    auto mock = std::make_shared<MockBackend>();
    mock->push("question_to_quadruple", "Alice Smith | play for | ? | 2012");
    mock->push("extract_facts",
               "Alice Smith | play for | Redhawks | 2009 | 2011\n"
               "Alice Smith | play for | Bluejays | 2012 | -");
    mock->push("formulate_answer", "Bluejays");
    auto ctx = mock_context(mock, PipelineKind::ko);
    KnowledgeBase kb;
    auto bundle = EvidenceBundle::make(BundleMode::closest, {{"2013", "document text"}});
    AnswerRecord rec = run_ko("Which team did Alice Smith play for in 2012?", 2012, bundle, kb, ctx);
    CHECK(rec.prediction == "Bluejays");
    CHECK(rec.trace["quadruple"] == "Alice Smith | play for | ? | 2012");
    REQUIRE(rec.trace.contains("kb_hits"));
    REQUIRE(rec.trace["kb_hits"].size() == 1);  // time filter excludes Redhawks
    CHECK(rec.trace["kb_hits"][0] == "Alice Smith | play for | Bluejays | 2012 | -");
    CHECK(rec.trace["kb_delta"]["inserted"] == 2);
    CHECK(kb.stats().fact_count == 2);
}

TEST_CASE("ko records a quadruple_parse failure with the raw reply") {
    auto mock = std::make_shared<MockBackend>(
        std::vector<std::string>{"no structure", "still none"});
    auto ctx = mock_context(mock, PipelineKind::ko);
    KnowledgeBase kb;
    auto bundle = EvidenceBundle::make(BundleMode::closest, {{"2013", "text"}});
    AnswerRecord rec = run_ko("q?", 2012, bundle, kb, ctx);
    REQUIRE(rec.failure.has_value());
    CHECK(*rec.failure == "quadruple_parse");
    CHECK(rec.trace["raw_reply"] == "still none");
    CHECK(kb.stats().fact_count == 0);
}

TEST_CASE("ko relation fallback widens to subject-only lookup") {
    auto mock = std::make_shared<MockBackend>();
    mock->push("question_to_quadruple", "Alice | plays at | ? | 2012");  // relation mismatch
    mock->push("formulate_answer", "Bluejays");
    auto ctx = mock_context(mock, PipelineKind::ko);
    ctx.config.relation_fallback = true;
    ctx.extractor = [](const std::string&) {
        return std::vector<TemporalFact>{TemporalFact("Alice", "play for", "Bluejays", 2012,
                                                      std::nullopt)};
    };
    KnowledgeBase kb;
    auto bundle = EvidenceBundle::make(BundleMode::closest, {{"2013", "text"}});
    AnswerRecord rec = run_ko("q?", 2012, bundle, kb, ctx);
    REQUIRE(rec.trace.contains("kb_hits"));
    CHECK(rec.trace["kb_hits"].size() == 1);
    CHECK(rec.prediction == "Bluejays");
}

namespace {

std::vector<BenchmarkEvent> small_benchmark() {
    BenchmarkEvent e1;
    e1.event_id = 2;  // out of order on purpose; the runner sorts
    e1.incidents["2010"] = make_incident(2010, 2011, "Bob in 2010?", "Foxes",
                                         "Bob Jones played for Foxes from 2008 to 2011.");
    BenchmarkEvent e2;
    e2.event_id = 1;
    e2.incidents["2010"] = make_incident(2010, 2011, "Alice in 2010?", "Redhawks",
                                         "Alice Smith played for Redhawks from 2009 to 2011.");
    e2.incidents["2012"] =
        make_incident(2012, 2013, "Alice in 2012?", "Bluejays",
                      "Alice Smith played for Redhawks from 2009 to 2011. "
                      "Alice Smith has played for Bluejays since 2012.");
    return {e1, e2};
}

}  // namespace

TEST_CASE("run_benchmark visits incidents in (event_id, year) order") {
    auto mock = std::make_shared<MockBackend>(
        std::vector<std::string>{"r1", "r2", "r3"});
    auto ctx = mock_context(mock, PipelineKind::icl);
    ctx.config.snapshot_mode = BundleMode::closest;
    auto events = small_benchmark();
    RunResult result = run_benchmark(events, ctx, nullptr);
    REQUIRE(result.records.size() == 3);
    CHECK(result.records[0].event_id == 1);
    CHECK(result.records[0].q_year == 2010);
    CHECK(result.records[1].event_id == 1);
    CHECK(result.records[1].q_year == 2012);
    CHECK(result.records[2].event_id == 2);
    CHECK(result.records[0].prediction == "r1");
    CHECK(result.records[2].prediction == "r3");
}

TEST_CASE("manifest pins config, versions, seed, and a stable hash") {
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{"a", "b", "c"});
    auto ctx = mock_context(mock, PipelineKind::icl);
    ctx.config.seed = 42;
    auto events = small_benchmark();
    RunResult r1 = run_benchmark(events, ctx, nullptr);
    CHECK(r1.manifest["record_count"] == 3);
    CHECK(r1.manifest["seed"] == 42);
    CHECK(r1.manifest["backend"] == "mock");
    CHECK(r1.manifest["template_version"] == kTemplateVersion);
    CHECK(r1.manifest["pattern_version"] == "patterns-v1");
    std::string hash = r1.manifest["config_hash"].get<std::string>();
    CHECK(hash.size() == 16);
    // identical config -> identical hash
    auto mock2 = std::make_shared<MockBackend>(std::vector<std::string>{"a", "b", "c"});
    auto ctx2 = mock_context(mock2, PipelineKind::icl);
    ctx2.config.seed = 42;
    CHECK(run_benchmark(events, ctx2, nullptr).manifest["config_hash"] == hash);
}

TEST_CASE("a question failure never aborts the run") {
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{"only one reply"});
    auto ctx = mock_context(mock, PipelineKind::icl);
    auto events = small_benchmark();
    RunResult result = run_benchmark(events, ctx, nullptr);
    REQUIRE(result.records.size() == 3);
    CHECK_FALSE(result.records[0].failure.has_value());
    REQUIRE(result.records[1].failure.has_value());
    CHECK(*result.records[1].failure == "backend_error");
    CHECK(*result.records[2].failure == "backend_error");
}

TEST_CASE("per-question KB scope isolates questions from each other") {
    auto mock = std::make_shared<MockBackend>();
    for (int i = 0; i < 3; ++i) {
        mock->push("formulate_answer", "whatever");
    }
    mock->push("question_to_quadruple", "Alice Smith | play for | ? | 2010");
    mock->push("question_to_quadruple", "Alice Smith | play for | ? | 2012");
    mock->push("question_to_quadruple", "Bob Jones | play for | ? | 2010");
    auto ctx = mock_context(mock, PipelineKind::ko);
    ctx.config.kb_scope = KbScope::per_question;
    ctx.extractor = rule_based_extract;
    auto events = small_benchmark();
    KnowledgeBase run_kb;
    RunResult result = run_benchmark(events, ctx, &run_kb);
    REQUIRE(result.records.size() == 3);
    for (const auto& rec : result.records) CHECK_FALSE(rec.failure.has_value());
    // per-question scope never touches the run-level KB
    CHECK(run_kb.stats().fact_count == 0);
}

TEST_CASE("unified mode requires an articles corpus and an entity key") {
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{"x"});
    auto ctx = mock_context(mock, PipelineKind::icl);
    ctx.config.snapshot_mode = BundleMode::unified;
    auto events = small_benchmark();
    RunResult no_articles = run_benchmark(events, ctx, nullptr);
    for (const auto& rec : no_articles.records) {
        REQUIRE(rec.failure.has_value());
        CHECK(*rec.failure == "evidence_error");
    }

    // with articles and entity keys, unified evidence flows through
    events[1].extras["entity"] = "Alice Smith";
    events[0].extras["entity"] = "Bob Jones";
    std::map<std::string, std::vector<TimestampedArticle>> articles;
    articles["alice smith"].push_back(
        {Date::parse("2012-05-01"), "Alice Smith", "Alice Smith has played for Bluejays since 2012."});
    articles["bob jones"].push_back(
        {Date::parse("2011-03-01"), "Bob Jones", "Bob Jones played for Foxes from 2008 to 2011."});
    auto mock2 = std::make_shared<MockBackend>(std::vector<std::string>{"a", "b", "c"});
    auto ctx2 = mock_context(mock2, PipelineKind::icl);
    ctx2.config.snapshot_mode = BundleMode::unified;
    RunResult ok = run_benchmark(events, ctx2, nullptr, &articles);
    for (const auto& rec : ok.records) CHECK_FALSE(rec.failure.has_value());
    CHECK(ok.records[0].snapshot_mode == BundleMode::unified);
}

TEST_CASE("answer records round-trip through JSONL") {
    AnswerRecord rec;
    rec.event_id = 7;
    rec.q_year = 2014;
    rec.question = "q?";
    rec.prediction = "p";
    rec.failure = "context_overflow";
    rec.pipeline = PipelineKind::rag;
    rec.snapshot_mode = BundleMode::cumulative;
    rec.evidence_chars = 123;
    rec.trace["note"] = "kept";
    auto parsed = records_from_jsonl(records_to_jsonl({rec}));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].event_id == 7);
    CHECK(parsed[0].failure == std::optional<std::string>("context_overflow"));
    CHECK(parsed[0].pipeline == PipelineKind::rag);
    CHECK(parsed[0].snapshot_mode == BundleMode::cumulative);
    CHECK(parsed[0].trace["note"] == "kept");
    CHECK_THROWS_AS(records_from_jsonl("{bad\n"), SchemaError);
}
