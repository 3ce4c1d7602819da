#include "demo_graph.hpp"

#include <kgrag/entity_recognition.hpp>
#include <kgrag/errors.hpp>
#include <kgrag/semantic_index.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace kgrag;
using kgrag::testing::demo_store;

namespace {

class Recognition_ : public ::testing::Test {
protected:
    KgStore store = demo_store();
    HashEmbeddingProvider provider{64};
    DiseaseIndex diseases = DiseaseIndex::build(store, provider);
};

ScriptEntry extract(std::string prompt, std::string reply) {
    return {"extract", std::move(prompt), {}, {}, std::move(reply), {}};
}

}  // namespace

TEST(ParseExtraction, AcceptsExactShape) {
    EXPECT_EQ(parse_extraction_reply(R"({"diseases":["Bardet-Biedl Syndrome"]})"),
              (std::vector<std::string>{"Bardet-Biedl Syndrome"}));
    EXPECT_EQ(parse_extraction_reply("```json\n{\"diseases\": [\" psoriasis \", \"psoriasis\"]}\n```"),
              (std::vector<std::string>{"psoriasis"}));
    EXPECT_EQ(parse_extraction_reply(R"({"diseases":[]})"), std::vector<std::string>{});
}

TEST(ParseExtraction, RejectsOtherShapes) {
    EXPECT_FALSE(parse_extraction_reply("psoriasis"));
    EXPECT_FALSE(parse_extraction_reply(R"({"disease":["x"]})"));
    EXPECT_FALSE(parse_extraction_reply(R"({"diseases":"x"})"));
    EXPECT_FALSE(parse_extraction_reply(R"({"diseases":[1]})"));
    EXPECT_FALSE(parse_extraction_reply(R"({"diseases":["x"],"extra":1})"));
}

TEST(ExtractMentions, ScriptedReplies) {
    const std::string q1 = "What drugs treat Bardet-Biedl Syndrome?";
    const std::string q2 = "Which genes do hypertension and liver benign neoplasm share? Focus on the disease liver benign neoplasm.";
    const std::string q3 = "What is a gene?";
    ScriptedChatProvider chat({extract(q1, R"({"diseases":["Bardet-Biedl Syndrome"]})"),
                               extract(q2, R"({"diseases":["liver benign neoplasm"]})"),
                               extract(q3, R"({"diseases":[]})")});
    EXPECT_EQ(extract_disease_mentions(chat, {}, q1).mentions,
              (std::vector<std::string>{"Bardet-Biedl Syndrome"}));
    EXPECT_EQ(extract_disease_mentions(chat, {}, q2).mentions,
              (std::vector<std::string>{"liver benign neoplasm"}));
    const auto none = extract_disease_mentions(chat, {}, q3);
    EXPECT_TRUE(none.mentions.empty());
    EXPECT_FALSE(none.parse_failed);
    EXPECT_GT(none.usage.total_tokens, 0);
}

TEST(ExtractMentions, RetriesOnceThenGivesUp) {
    ScriptedChatProvider retry_ok({extract("q", "psoriasis, I think"),
                                   {"extract-retry", {}, "q", {}, R"({"diseases":["psoriasis"]})", {}}});
    const auto ok = extract_disease_mentions(retry_ok, {}, "q");
    EXPECT_EQ(ok.mentions, (std::vector<std::string>{"psoriasis"}));
    EXPECT_FALSE(ok.parse_failed);

    ScriptedChatProvider never({extract("q", "nope"), {"extract-retry", {}, {}, {}, "still nope", {}}});
    const auto bad = extract_disease_mentions(never, {}, "q");
    EXPECT_TRUE(bad.mentions.empty());
    EXPECT_TRUE(bad.parse_failed);
    EXPECT_FALSE(bad.diagnostic.empty());
    const auto first = chat(never, {}, {"extract", kExtractionSystemPrompt, "q"}).usage;
    EXPECT_GT(bad.usage.total_tokens, first.total_tokens);
}

TEST_F(Recognition_, ExactNameMatchesWithScoreOne) {
    const auto m = match_entity(diseases, "liver benign neoplasm");
    EXPECT_EQ(m.node.node_id, "disease:lbn");
    EXPECT_NEAR(m.score, 1.0, 1e-12);
    EXPECT_EQ(m.mention, "liver benign neoplasm");
}

TEST_F(Recognition_, LowercasedMentionStillMatches) {
    const auto m = match_entity(diseases, "bardet-biedl syndrome");
    EXPECT_EQ(m.node.name, "Bardet-Biedl Syndrome");
    EXPECT_NEAR(m.score, 1.0, 1e-12);
}

TEST_F(Recognition_, NearestAgreesWithBruteForce) {
    for (const auto* mention : {"parkinson", "benign liver tumour", "diabetes", "alzheimer dementia"}) {
        const auto q = provider.embed(mention);
        std::string best;
        double best_score = -2;
        for (const auto& n : store.nodes_of_type("Disease")) {
            const auto v = provider.embed(n.name);
            double ab = 0, aa = 0, bb = 0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                ab += q[i] * v[i];
                aa += q[i] * q[i];
                bb += v[i] * v[i];
            }
            const double s = ab / std::sqrt(aa * bb);
            if (s > best_score || (s == best_score && n.node_id < best)) {
                best_score = s;
                best = n.node_id;
            }
        }
        EXPECT_EQ(match_entity(diseases, mention).node.node_id, best) << mention;
    }
}

TEST_F(Recognition_, TwoMentionsTwoMatches) {
    const std::string q = "Which genes do hypertension and psoriasis share?";
    ScriptedChatProvider chat({extract(q, R"({"diseases":["hypertension","psoriasis"]})")});
    const auto r = recognize(chat, {}, diseases, q);
    ASSERT_EQ(r.matches.size(), 2u);
    EXPECT_EQ(r.matches[0].node.node_id, "disease:htn");
    EXPECT_EQ(r.matches[1].node.node_id, "disease:pso");
    EXPECT_FALSE(r.used_fallback);
}

TEST_F(Recognition_, SameNodeTwiceIsDeduplicated) {
    const std::string q = "Is Psoriasis the same as psoriasis?";
    ScriptedChatProvider chat({extract(q, R"({"diseases":["Psoriasis","psoriasis"]})")});
    const auto r = recognize(chat, {}, diseases, q);
    ASSERT_EQ(r.matches.size(), 1u);
    EXPECT_EQ(r.matches[0].mention, "Psoriasis");
}

TEST_F(Recognition_, EmptyExtractionFallsBackToFiveDiseases) {
    const std::string q = "What is a gene?";
    ScriptedChatProvider chat({extract(q, R"({"diseases":[]})")});
    const auto r = recognize(chat, {}, diseases, q);
    EXPECT_TRUE(r.used_fallback);
    ASSERT_EQ(r.matches.size(), kFallbackDiseaseCount);
    const auto top = top_k(diseases.index(), provider, q, kFallbackDiseaseCount);
    for (std::size_t i = 0; i < top.size(); ++i) {
        EXPECT_EQ(r.matches[i].node.node_id, top[i].item_id);
        EXPECT_TRUE(r.matches[i].mention.empty());
    }
}

TEST_F(Recognition_, UnparseableExtractionFallsBackWithDiagnostic) {
    ScriptedChatProvider chat({{"", {}, {}, {}, "not json", {}}});
    const auto r = recognize(chat, {}, diseases, "Tell me about psoriasis");
    EXPECT_TRUE(r.used_fallback);
    EXPECT_EQ(r.diagnostics.size(), 1u);
}

TEST_F(Recognition_, AdoptValidatesIndex) {
    const auto path = std::filesystem::temp_directory_path() / "kgrag_disease_index.jsonl";
    diseases.index().save(path);
    const auto adopted = DiseaseIndex::adopt(store, provider, VectorIndex::load(path, provider.name()));
    EXPECT_EQ(adopted.size(), 7u);
    EXPECT_THROW(DiseaseIndex::adopt(store, HashEmbeddingProvider(32),
                                     VectorIndex::load(path, provider.name())),
                 ConfigError);
    std::filesystem::remove(path);
    const auto genes = VectorIndex::build(provider, {{"gene:VHL", "VHL"}});
    EXPECT_THROW(DiseaseIndex::adopt(store, provider, genes), ConfigError);
}

TEST(RecognitionErrors, EmptyDiseaseIndex) {
    KgStore store;
    HashEmbeddingProvider provider;
    const auto diseases = DiseaseIndex::build(store, provider);
    EXPECT_THROW(match_entity(diseases, "x"), InvalidArgument);
}
