#include <catch2/catch_amalgamated.hpp>

#include "tqa/eval.hpp"

using namespace tqa;

TEST_CASE("normalize_answer lowers, strips punctuation, drops leading articles") {
    CHECK(normalize_answer("The Los Angeles Lakers!") == "los angeles lakers");
    CHECK(normalize_answer("  A  dog.  ") == "dog");
    CHECK(normalize_answer("an apple") == "apple");
    CHECK(normalize_answer("F.C. Barcelona") == "f c barcelona");
    CHECK(normalize_answer("\xE2\x80\x9Cquoted\xE2\x80\x9D") == "quoted");
    // "the" is only dropped at the front
    CHECK(normalize_answer("over the top") == "over the top");
}

TEST_CASE("exact match follows the normalization rules") {
    CHECK(exact_match("the Los Angeles Lakers", {"Los Angeles Lakers"}));
    CHECK_FALSE(exact_match("Lakers", {"Los Angeles Lakers"}));
    CHECK(exact_match("MIAMI HEAT.", {"Boston Celtics", "Miami Heat"}));
}

TEST_CASE("token F1 hand-computed values") {
    // precision 1, recall 1/3 -> harmonic mean 0.5
    CHECK(token_f1("Lakers", {"Los Angeles Lakers"}) == Catch::Approx(0.5).epsilon(1e-9));
    CHECK(token_f1("Los Angeles Lakers", {"Los Angeles Lakers"}) == Catch::Approx(1.0));
    CHECK(token_f1("totally wrong", {"Los Angeles Lakers"}) == 0.0);
    // max over gold names
    CHECK(token_f1("Lakers", {"Boston Celtics", "Lakers"}) == Catch::Approx(1.0));
    // duplicated tokens are multiset-matched, not double-counted
    CHECK(token_f1("heat heat", {"Miami Heat"}) ==
          Catch::Approx(2.0 * 0.5 * 0.5 / (0.5 + 0.5)));
    CHECK(token_f1("", {"x"}) == 0.0);
}

TEST_CASE("prediction splitting on commas, semicolons, newlines, and 'and'") {
    CHECK(split_prediction_items("A, B; C\nD") == std::vector<std::string>{"A", "B", "C", "D"});
    CHECK(split_prediction_items("Miami Heat and Los Angeles Lakers") ==
          std::vector<std::string>{"Miami Heat", "Los Angeles Lakers"});
    CHECK(split_prediction_items("Sandy Alexander") ==
          std::vector<std::string>{"Sandy Alexander"});  // embedded "and" is not a delimiter
    CHECK(split_prediction_items("") == std::vector<std::string>{});
}

TEST_CASE("set F1 hand-computed values") {
    // pred {A}, gold {A, B}: precision 1, recall 0.5 -> 2/3
    CHECK(set_f1({"A"}, {"A", "B"}) == Catch::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(set_f1({"A", "B"}, {"A", "B"}) == Catch::Approx(1.0));
    CHECK(set_f1({"C"}, {"A", "B"}) == 0.0);
    CHECK(set_f1({}, {}) == 1.0);
    CHECK(set_f1({}, {"A"}) == 0.0);
    // one-to-one: a repeated prediction can't match the same gold twice
    CHECK(set_f1({"A", "A"}, {"A"}) == Catch::Approx(2.0 * 0.5 * 1.0 / 1.5));
}

TEST_CASE("consensus truth table") {
    auto vote = [](std::optional<bool> v) {
        JudgeVote j;
        j.judge_name = "j";
        j.verdict = v;
        if (!v) j.error = "boom";
        return j;
    };
    CHECK(consensus({vote(true), vote(true)}) == Consensus::correct);
    CHECK(consensus({vote(false), vote(false)}) == Consensus::incorrect);
    CHECK(consensus({vote(true), vote(false)}) == Consensus::disagreement);
    CHECK(consensus({vote(true), vote(std::nullopt)}) == Consensus::unevaluated);
    CHECK(consensus({vote(std::nullopt), vote(std::nullopt)}) == Consensus::unevaluated);
    CHECK(consensus({vote(true)}) == Consensus::correct);
    CHECK_THROWS_AS(consensus({}), SchemaError);
}

TEST_CASE("judge re-asks once on an unconstrained reply") {
    MockBackend good({"YES"});
    JudgeVote v1 = judge("q?", {"A"}, "A", good, TemplateSet::defaults());
    CHECK(v1.verdict == std::optional<bool>(true));

    MockBackend sloppy({"I believe the answer is correct", "NO"});
    JudgeVote v2 = judge("q?", {"A"}, "B", sloppy, TemplateSet::defaults());
    CHECK(v2.verdict == std::optional<bool>(false));

    MockBackend hopeless({"maybe", "who knows"});
    JudgeVote v3 = judge("q?", {"A"}, "B", hopeless, TemplateSet::defaults());
    CHECK_FALSE(v3.verdict.has_value());
    CHECK_FALSE(v3.error.empty());

    MockBackend empty;
    JudgeVote v4 = judge("q?", {"A"}, "B", empty, TemplateSet::defaults());
    CHECK_FALSE(v4.verdict.has_value());
}

TEST_CASE("evaluate_record computes metrics; set F1 only for multi-gold") {
    AnswerRecord rec;
    rec.event_id = 1;
    rec.q_year = 2010;
    rec.question = "q?";
    rec.prediction = "Miami Heat";
    rec.evidence_chars = 1234;

    EvalRecord single = evaluate_record(rec, {{"Miami Heat", "Q1"}}, 2);
    CHECK(single.verdict.em);
    CHECK(single.verdict.f1 == Catch::Approx(1.0));
    CHECK_FALSE(single.verdict.set_f1.has_value());
    CHECK(single.verdict.consensus == Consensus::unevaluated);  // no judges
    CHECK(single.counts_correct());  // falls back to EM
    CHECK(single.fact_change_count == 2);
    CHECK(single.doc_length_chars == 1234);

    EvalRecord multi = evaluate_record(rec, {{"Miami Heat", "Q1"}, {"Lakers", "Q2"}}, 0);
    REQUIRE(multi.verdict.set_f1.has_value());
    CHECK(*multi.verdict.set_f1 == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("judged consensus overrides EM for counting") {
    AnswerRecord rec;
    rec.question = "q?";
    rec.prediction = "the correct entity phrased differently";
    auto yes = std::make_shared<MockBackend>(std::vector<std::string>{"YES"});
    EvalRecord er = evaluate_record(rec, {{"Correct Entity", "Q1"}}, 0, {yes});
    CHECK_FALSE(er.verdict.em);
    CHECK(er.verdict.consensus == Consensus::correct);
    CHECK(er.counts_correct());
}

TEST_CASE("fact_change_count is distinct answer sets minus one") {
    BenchmarkEvent ev;
    auto mk = [](const std::string& name) {
        Incident inc;
        inc.q_year = 2010;
        inc.map_year = 2011;
        inc.question = "q";
        inc.answer = {{name, "Q"}};
        return inc;
    };
    ev.incidents["2010"] = mk("A");
    ev.incidents["2011"] = mk("the A");  // same normalized set
    ev.incidents["2012"] = mk("B");
    CHECK(fact_change_count(ev) == 1);
    ev.incidents["2013"] = mk("C");
    CHECK(fact_change_count(ev) == 2);
}

namespace {

EvalRecord make_eval(long long event_id, int q_year, PipelineKind p, BundleMode m, bool em,
                     std::size_t doc_len = 0, int changes = 0) {
    EvalRecord er;
    er.record.event_id = event_id;
    er.record.q_year = q_year;
    er.record.pipeline = p;
    er.record.snapshot_mode = m;
    er.verdict.em = em;
    er.doc_length_chars = doc_len;
    er.fact_change_count = changes;
    return er;
}

}  // namespace

TEST_CASE("zero-shot split joins on (event_id, q_year) and counts uncovered") {
    std::vector<EvalRecord> zs = {
        make_eval(1, 2010, PipelineKind::zs, BundleMode::closest, true),
        make_eval(1, 2012, PipelineKind::zs, BundleMode::closest, false),
    };
    std::vector<EvalRecord> target = {
        make_eval(1, 2010, PipelineKind::ko, BundleMode::closest, true),
        make_eval(1, 2012, PipelineKind::ko, BundleMode::closest, true),
        make_eval(9, 2010, PipelineKind::ko, BundleMode::closest, true),  // no zs coverage
    };
    ZeroShotSplit split = split_by_zero_shot(target, zs);
    REQUIRE(split.zs_correct.size() == 1);
    CHECK(split.zs_correct[0].record.q_year == 2010);
    CHECK(split.zs_correct[0].zs_correct == std::optional<bool>(true));
    REQUIRE(split.zs_incorrect.size() == 1);
    CHECK(split.zs_incorrect[0].record.q_year == 2012);
    CHECK(split.uncovered == 1);
}

TEST_CASE("bucketing by fact changes and doc length") {
    std::vector<EvalRecord> recs = {
        make_eval(1, 2010, PipelineKind::ko, BundleMode::closest, true, 500, 0),
        make_eval(1, 2011, PipelineKind::ko, BundleMode::closest, false, 1500, 0),
        make_eval(1, 2012, PipelineKind::ko, BundleMode::closest, true, 7000, 3),
    };
    auto by_changes = bucket_by_fact_changes(recs);
    CHECK(by_changes.at(0).n == 2);
    CHECK(by_changes.at(0).correct == 1);
    CHECK(by_changes.at(3).accuracy() == std::optional<double>(1.0));

    auto by_len = bucket_by_doc_length(recs, {0, 1000, 5000, 20000});
    CHECK(by_len.at(0).n == 1);
    CHECK(by_len.at(1000).n == 1);
    CHECK(by_len.at(5000).n == 1);
    CHECK(by_len.at(20000).n == 0);  // empty buckets are reported
    CHECK_FALSE(by_len.at(20000).accuracy().has_value());
    CHECK_THROWS_AS(bucket_by_doc_length(recs, {}), SchemaError);
    CHECK_THROWS_AS(bucket_by_doc_length(recs, {100, 100}), SchemaError);
}

TEST_CASE("report rows follow the six-column layout with N/A cells") {
    std::vector<EvalRecord> recs = {
        make_eval(1, 2010, PipelineKind::icl, BundleMode::closest, true),
        make_eval(1, 2011, PipelineKind::icl, BundleMode::closest, false),
        make_eval(1, 2010, PipelineKind::rag, BundleMode::cumulative, true),
        make_eval(1, 2010, PipelineKind::ko, BundleMode::closest, true),
    };
    ReportRow row = report_row("run-a", {recs});
    REQUIRE(row.cells.size() == 6);
    CHECK(row.cells[0].accuracy == std::optional<double>(0.5));  // ICL/closest
    CHECK_FALSE(row.cells[1].accuracy.has_value());              // ICL/latest absent
    CHECK_FALSE(row.cells[2].accuracy.has_value());              // RAG/closest absent
    CHECK(row.cells[4].accuracy == std::optional<double>(1.0));  // RAG/cumulative
    CHECK(row.cells[5].accuracy == std::optional<double>(1.0));  // KO

    std::string text = render_table_text({row});
    CHECK(text.find("ICL/closest") != std::string::npos);
    CHECK(text.find("RAG/cumulative") != std::string::npos);
    CHECK(text.find("N/A") != std::string::npos);
    std::string csv = render_table_csv({row});
    CHECK(csv.rfind("run", 0) == 0);
    CHECK(csv.find("run-a,0.5000,N/A,N/A,N/A,1.0000,1.0000") != std::string::npos);
}

TEST_CASE("eval records round-trip through JSONL") {
    AnswerRecord rec;
    rec.event_id = 3;
    rec.q_year = 2011;
    rec.question = "q?";
    rec.prediction = "A";
    EvalRecord er = evaluate_record(rec, {{"A", "Q1"}, {"B", "Q2"}}, 1);
    er.zs_correct = false;
    er.verdict.judge_votes.push_back({"judge-1", true, ""});
    er.verdict.consensus = Consensus::correct;
    auto parsed = eval_records_from_jsonl(eval_records_to_jsonl({er}));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].record.event_id == 3);
    CHECK(parsed[0].gold.size() == 2);
    CHECK(parsed[0].verdict.em == er.verdict.em);
    CHECK(parsed[0].verdict.set_f1 == er.verdict.set_f1);
    CHECK(parsed[0].verdict.consensus == Consensus::correct);
    CHECK(parsed[0].zs_correct == std::optional<bool>(false));
    REQUIRE(parsed[0].verdict.judge_votes.size() == 1);
    CHECK(parsed[0].verdict.judge_votes[0].verdict == std::optional<bool>(true));
}
