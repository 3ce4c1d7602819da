#include "graph_fixtures.hpp"
#include "synthetic_fixture.hpp"

#include <kgrag/errors.hpp>
#include <kgrag/harness.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace kgrag;
using kgrag::testing::load_store;
using kgrag::testing::make_synthetic_fixture;

namespace {

std::vector<bool> with_true_count(std::size_t n, std::size_t n_true) {
    std::vector<bool> v(n, false);
    for (std::size_t i = 0; i < n_true; ++i) v[(i * 7) % n] = true;  // 7 is coprime to the sizes used
    return v;
}

AnswerRecord reply(std::string text) {
    AnswerRecord r;
    r.answer_text = std::move(text);
    return r;
}

struct FixtureRig {
    kgrag::testing::SyntheticFixture fx;
    KgStore store;
    HashEmbeddingProvider provider{256};
    DiseaseIndex diseases;
    ScriptedChatProvider chat;

    explicit FixtureRig(std::size_t n)
        : fx(make_synthetic_fixture(n)),
          store(load_store(fx.nodes_jsonl, fx.edges_jsonl)),
          diseases(DiseaseIndex::build(store, provider)),
          chat(fx.script) {}
};

}  // namespace

TEST(Jaccard, WorkedExamples) {
    EXPECT_DOUBLE_EQ(jaccard({"a", "b"}, {"a", "b"}), 1.0);
    EXPECT_DOUBLE_EQ(jaccard({"a"}, {"b"}), 0.0);
    EXPECT_DOUBLE_EQ(jaccard({"a", "b", "c"}, {"b", "c", "d"}), 0.5);
    EXPECT_DOUBLE_EQ(jaccard({}, {}), 1.0);
    EXPECT_DOUBLE_EQ(jaccard({"a"}, {}), 0.0);
}

TEST(Jaccard, CaseAndWhitespaceInsensitiveSets) {
    EXPECT_DOUBLE_EQ(jaccard({" VHL", "agt", "AGT"}, {"vhl", "AGT "}), 1.0);
}

TEST(Bootstrap, DegenerateVectors) {
    const auto all = bootstrap_accuracy(std::vector<bool>(300, true), 1000, 150, 1);
    EXPECT_DOUBLE_EQ(all.mean, 1.0);
    EXPECT_DOUBLE_EQ(all.std, 0.0);
    EXPECT_EQ(all.formatted(), "1.00 \xC2\xB1 0.00");
    const auto none = bootstrap_accuracy(std::vector<bool>(300, false), 1000, 150, 1);
    EXPECT_DOUBLE_EQ(none.mean, 0.0);
    EXPECT_DOUBLE_EQ(none.std, 0.0);
}

TEST(Bootstrap, HalfTrueMatchesBinomialOracle) {
    const auto r = bootstrap_accuracy(with_true_count(300, 150), 1000, 150, 42);
    EXPECT_NEAR(r.mean, 0.5, 0.02);
    const double sd = std::sqrt(0.25 / 150);
    EXPECT_NEAR(r.std, sd, 0.2 * sd);
    EXPECT_EQ(r.accuracies.size(), 1000u);
}

TEST(Bootstrap, SeedReproducibility) {
    const auto v = with_true_count(300, 240);
    EXPECT_EQ(bootstrap_accuracy(v, 100, 150, 9).accuracies, bootstrap_accuracy(v, 100, 150, 9).accuracies);
    EXPECT_NE(bootstrap_accuracy(v, 100, 150, 9).accuracies, bootstrap_accuracy(v, 100, 150, 10).accuracies);
    EXPECT_THROW(bootstrap_accuracy({}, 10, 10, 0), InvalidArgument);
}

TEST(GradeTf, Examples) {
    EXPECT_EQ(grade_tf("True."), TfGrade::true_answer);
    EXPECT_EQ(grade_tf(R"({"answer": "false"})"), TfGrade::false_answer);
    EXPECT_EQ(grade_tf(R"({"answer": true})"), TfGrade::true_answer);
    EXPECT_EQ(grade_tf("It depends"), TfGrade::unparseable);
    EXPECT_EQ(grade_tf("  false, because the context says so"), TfGrade::false_answer);
    EXPECT_EQ(grade_tf("Truely"), TfGrade::unparseable);
}

TEST(GradeMcq, Examples) {
    const std::vector<std::string> opts = {"IL23R", "APOE", "SNCA", "AGT", "BBS1"};
    EXPECT_EQ(grade_mcq("C", opts), 2u);
    EXPECT_EQ(grade_mcq("(B) APOE", opts), 1u);
    EXPECT_EQ(grade_mcq("The gene is snca.", opts), 2u);
    EXPECT_EQ(grade_mcq(R"({"answer": "D"})", opts), 3u);
    EXPECT_FALSE(grade_mcq("Either APOE or SNCA", opts));
    EXPECT_FALSE(grade_mcq("No idea", opts));
}

TEST(GradeMcq, NestedOptionTextIsNotAmbiguous) {
    const std::vector<std::string> opts = {"diabetes", "type 2 diabetes", "asthma", "gout", "acne"};
    EXPECT_EQ(grade_mcq("It is type 2 diabetes", opts), 1u);
}

TEST(AnswerSet, Parsing) {
    EXPECT_EQ(parse_answer_set(R"({"answer": ["VHL", "AGT"]})"), (std::vector<std::string>{"VHL", "AGT"}));
    EXPECT_EQ(parse_answer_set("```json\n[\"VHL\"]\n```"), (std::vector<std::string>{"VHL"}));
    EXPECT_FALSE(parse_answer_set("VHL and AGT"));
    EXPECT_FALSE(parse_answer_set(R"({"answer": "VHL"})"));
}

TEST(Reduction, PaperAverages) {
    EXPECT_NEAR(reduction_pct(8006, 3693), 53.9, 0.1);
    EXPECT_THROW(reduction_pct(0, 10), InvalidArgument);
}

TEST(Perturbation, LowercasesDiseaseNames) {
    const auto store = load_store(
        R"({"id":"a","type":"Disease","name":"Bardet-Biedl Syndrome"})" "\n"
        R"({"id":"b","type":"Disease","name":"Syndrome"})" "\n"
        R"({"id":"g","type":"Gene","name":"BBS1"})" "\n",
        "");
    BenchmarkQuestion q;
    q.text = "Is BBS1 linked to Bardet-Biedl Syndrome?";
    EXPECT_EQ(perturb_lowercase_entities(q, store), "Is BBS1 linked to bardet-biedl syndrome?");
    q.entities = {"BBS1"};
    EXPECT_EQ(perturb_lowercase_entities(q, store), "Is bbs1 linked to Bardet-Biedl Syndrome?");
}

TEST(Questions, ParseAndValidate) {
    std::istringstream ok(
        R"({"id":"1","kind":"tf","text":"x","correct_answer":"True"})" "\n"
        R"({"id":"2","kind":"mcq","text":"y","options":["a","b","c","d","e"],"correct_answer":"c"})" "\n"
        R"({"id":"3","kind":"retrieval","text":"z","expected_nodes":["VHL"]})" "\n");
    const auto qs = parse_questions(ok);
    ASSERT_EQ(qs.size(), 3u);
    EXPECT_TRUE(qs[0].tf_answer);
    EXPECT_EQ(qs[1].correct_option, "c");
    EXPECT_EQ(qs[2].expected_nodes, std::vector<std::string>{"VHL"});

    std::istringstream four(R"({"id":"1","kind":"mcq","text":"y","options":["a","b","c","d"],"correct_answer":"c"})");
    EXPECT_THROW(parse_questions(four), FormatError);
    std::istringstream dup(R"({"id":"1","kind":"tf","text":"x","correct_answer":true})" "\n"
                           R"({"id":"1","kind":"tf","text":"x","correct_answer":true})" "\n");
    EXPECT_THROW(parse_questions(dup), FormatError);
}

TEST(ChoiceBenchmark, GradesAndSorts) {
    std::vector<BenchmarkQuestion> qs(2);
    qs[0] = {"b", QuestionKind::tf, "Metformin treats diabetes.", true, {}, {}, {}, {}};
    qs[1] = {"a", QuestionKind::tf, "APOE causes psoriasis.", false, {}, {}, {}, {}};
    const auto report = run_choice_benchmark(
        qs, [](std::string_view) { return reply("True"); },
        0, 50, 2);
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_EQ(report.rows[0].id, "a");
    EXPECT_FALSE(report.rows[0].correct);
    EXPECT_TRUE(report.rows[1].correct);
    EXPECT_DOUBLE_EQ(report.accuracy, 0.5);
    std::ostringstream csv;
    report.write_csv(csv);
    EXPECT_NE(csv.str().find("a,"), std::string::npos);
}

TEST(ChoiceBenchmark, McqPromptListsOptions) {
    BenchmarkQuestion q{"m", QuestionKind::mcq, "Which gene?", false, "SNCA", {"IL23R", "APOE", "SNCA", "AGT", "BBS1"}, {}, {}};
    EXPECT_EQ(format_mcq_prompt(q), "Which gene?\nOptions:\nA) IL23R\nB) APOE\nC) SNCA\nD) AGT\nE) BBS1");
    std::string seen;
    const auto report = run_choice_benchmark({q}, [&](std::string_view p) {
        seen = p;
        return reply("C");
    }, 0, 10, 1);
    EXPECT_EQ(seen, format_mcq_prompt(q));
    EXPECT_TRUE(report.rows[0].correct);
}

TEST(RetrievalCorrect, SubstringRule) {
    std::vector<ContextSentence> got = {{"Disease x associates Gene VHL. Provenance: p.", {}, "d", {}}};
    EXPECT_TRUE(retrieval_correct({"vhl"}, got));
    EXPECT_FALSE(retrieval_correct({"VHL", "AGT"}, got));
}

TEST(RetrievalComparison, FixtureBeforeAndAfterPerturbation) {
    FixtureRig rig(12);
    const KgRagPipeline kg(rig.store, rig.diseases, rig.provider, rig.chat, {});
    const SchemaQueryBaseline base(rig.store, rig.chat, {});
    const auto clean = run_retrieval_comparison(rig.fx.questions, kg, base, rig.store, Perturbation::none);
    const auto lower = run_retrieval_comparison(rig.fx.questions, kg, base, rig.store,
                                                Perturbation::lowercase_entities);
    EXPECT_DOUBLE_EQ(clean.accuracy_baseline, 1.0);
    EXPECT_DOUBLE_EQ(lower.accuracy_baseline, 0.0);
    EXPECT_DOUBLE_EQ(lower.accuracy_kgrag, clean.accuracy_kgrag);
    EXPECT_GT(clean.accuracy_kgrag, 0.5);
    EXPECT_NEAR(clean.reduction_pct,
                (clean.avg_tokens_baseline - clean.avg_tokens_kgrag) / clean.avg_tokens_baseline * 100, 1e-9);
    EXPECT_EQ(clean.to_json()["questions"].size(), 12u);
    EXPECT_THROW(run_retrieval_comparison({}, kg, base, rig.store, Perturbation::none), InvalidArgument);
}

TEST(Sweep, GroundTruthScoresOneEverywhere) {
    FixtureRig rig(12);
    HashEmbeddingProvider other(64, 3);
    const auto report = hyperparameter_sweep(
        rig.fx.sweep_sets, {&rig.provider, &other}, {10, 100},
        [&](const EmbeddingProvider& p, std::size_t v) {
            PipelineOptions o;
            o.prune.context_volume = v;
            o.answer_system_prompt = kJsonAnswerSystemPrompt;
            return KgRagPipeline(rig.store, rig.diseases, p, rig.chat, o);
        });
    ASSERT_EQ(report.results.size(), 2u * 2u * 2u);
    for (const auto& cell : report.results) EXPECT_DOUBLE_EQ(cell.mean_jaccard, 1.0);
    const auto curves = report.curves()["curves"];
    ASSERT_EQ(curves.size(), 2u);
    EXPECT_EQ(curves[0]["x"], "context_volume");
    EXPECT_EQ(curves[0]["series"].size(), 2u);
    EXPECT_EQ(curves[0]["series"][0]["points"], nlohmann::json::parse("[[10,1.0],[100,1.0]]"));
}

TEST(Sweep, HalfRightAnswersScoreOneThird) {
    FixtureRig rig(4);
    std::vector<ScriptEntry> script;
    SweepPromptSet set{"single-disease", {}};
    for (std::size_t i = 0; i < 4; ++i) {
        auto q = rig.fx.questions[i];
        set.prompts.push_back(q);
        const auto answer = nlohmann::json{{"answer", {q.expected_nodes[0], "NOTAGENE"}}}.dump();
        script.push_back({"answer", {}, "Question: " + q.text, {}, answer, {}});
    }
    for (const auto& e : rig.fx.script) script.push_back(e);
    const ScriptedChatProvider chat(script);
    const auto report = hyperparameter_sweep({set}, {&rig.provider}, {150}, [&](const EmbeddingProvider& p, std::size_t v) {
        PipelineOptions o;
        o.prune.context_volume = v;
        o.answer_system_prompt = kJsonAnswerSystemPrompt;
        return KgRagPipeline(rig.store, rig.diseases, p, chat, o);
    });
    ASSERT_EQ(report.results.size(), 1u);
    EXPECT_NEAR(report.results[0].mean_jaccard, 1.0 / 3.0, 1e-12);
}

TEST(Sweep, UnparseableAnswerScoresZero) {
    FixtureRig rig(2);
    std::vector<ScriptEntry> script = {{"answer", {}, {}, {}, "VHL, probably", {}}};
    for (const auto& e : rig.fx.script) script.push_back(e);
    const ScriptedChatProvider chat(script);
    SweepPromptSet set{"single-disease", {rig.fx.questions[0]}};
    const auto report = hyperparameter_sweep({set}, {&rig.provider}, {10}, [&](const EmbeddingProvider& p, std::size_t) {
        return KgRagPipeline(rig.store, rig.diseases, p, chat, {});
    });
    EXPECT_DOUBLE_EQ(report.results[0].mean_jaccard, 0.0);
    EXPECT_FALSE(report.results[0].per_prompt[0].diagnostic.empty());
}

TEST(Csv, FieldQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}
