// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "synthetic_fixture.hpp"

#include <kgrag/baseline.hpp>
#include <kgrag/context_builder.hpp>
#include <kgrag/context_pruner.hpp>
#include <kgrag/harness.hpp>
#include <kgrag/kg_store.hpp>
#include <kgrag/pipeline.hpp>
#include <kgrag/semantic_index.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace kgrag;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    const char* title;
    double budget_s;
    std::function<Outcome()> check;
};

KgStore load_store(const std::string& nodes, const std::string& edges) {
    std::istringstream n(nodes), e(edges);
    KgStore store;
    store.ingest(n, e);
    return store;
}

double oracle_percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(h);
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double w = h - static_cast<double>(lo);
    return (1.0 - w) * v[lo] + w * v[hi];
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------------------

Outcome verbalization_golden() {
    const Triple t{{"d1", "Disease", "hypertension", {}}, "ASSOCIATES_DaG", {"g1", "Gene", "VHL", {}},
                   "GWAS Catalog", {}, Direction::outgoing};
    const auto text = verbalize_triple(t, false).text;
    return {text.rfind("Disease hypertension associates Gene VHL", 0) == 0, "\"" + text + "\""};
}

Outcome pruning_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(1, 500);
    std::uniform_real_distribution<double> u(0, 1);
    PruneConfig cfg;
    cfg.context_volume = 1000;  // larger than any instance: the selection is observed before any cap
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(len(rng));
        std::vector<double> sims(n);
        for (auto& x : sims) x = u(rng);
        std::vector<ContextSentence> sentences;
        for (std::size_t i = 0; i < n; ++i) sentences.push_back({std::to_string(i), {}, "d", {}});
        const double p75 = oracle_percentile(sims, 75);
        std::set<std::string> expected, got;
        for (std::size_t i = 0; i < n; ++i)
            if (sims[i] > p75 && sims[i] >= 0.5) expected.insert(std::to_string(i));
        for (const auto& s : prune_scored({{"d", sentences}}, {{"d", sims}}, cfg).sentences) got.insert(s.text);
        mismatches += expected != got;
    }
    return {mismatches == 0, "1000 instances, " + std::to_string(mismatches) + " mismatches"};
}

Outcome percentile_suite() {
    double max_err = 0;
    const auto track = [&](double got, double want) { max_err = std::max(max_err, std::abs(got - want)); };
    track(percentile(std::vector<double>{0.4}, 75), 0.4);
    track(percentile(std::vector<double>{0.2, 0.4, 0.55, 0.6, 0.9}, 75), 0.6);
    track(percentile(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 75), 0.325);
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> len(1, 1000);
    std::uniform_real_distribution<double> u(-1, 1), pu(0.5, 99.5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = u(rng);
        const double p = i % 2 ? 75.0 : pu(rng);
        track(percentile(v, p), oracle_percentile(v, p));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max abs error %.3g", max_err);
    return {max_err < 1e-12, buf};
}

Outcome vector_search_exactness() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> nd;
    std::vector<IndexEntry> entries;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(64);
        if (i % 10 == 9) {
            v = entries[static_cast<std::size_t>(i) - 5].vector;  // exact duplicates force ties
        } else {
            for (auto& x : v) x = nd(rng);
        }
        char id[16];
        std::snprintf(id, sizeof id, "item%04d", (i * 379) % 1000);
        entries.push_back({id, "", v});
    }
    const auto index = VectorIndex::from_entries("random-64", 64, entries);
    int mismatches = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> q(64);
        if (trial % 4 == 0) q = entries[static_cast<std::size_t>(trial) * 10 + 4].vector;
        else for (auto& x : q) x = nd(rng);
        std::vector<std::pair<double, std::string>> brute;
        for (const auto& e : entries) {
            double ab = 0, aa = 0, bb = 0;
            for (std::size_t d = 0; d < 64; ++d) {
                ab += q[d] * e.vector[d];
                aa += q[d] * q[d];
                bb += e.vector[d] * e.vector[d];
            }
            brute.emplace_back(ab / std::sqrt(aa * bb), e.item_id);
        }
        std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t k : {1u, 10u, 50u}) {
            const auto hits = index.search(q, k);
            if (hits.size() != k) ++mismatches;
            for (std::size_t i = 0; i < std::min(k, hits.size()); ++i)
                mismatches += hits[i].item_id != brute[i].second;
        }
    }
    return {mismatches == 0, "20 queries x k in {1,10,50}, " + std::to_string(mismatches) + " rank mismatches"};
}

Outcome bootstrap_statistics() {
    std::vector<bool> correct(300, false);
    for (std::size_t i = 0; i < 240; ++i) correct[(i * 7) % 300] = true;
    const auto a = bootstrap_accuracy(correct, 1000, 150, 12345);
    const auto b = bootstrap_accuracy(correct, 1000, 150, 12345);
    const double sd = std::sqrt(0.8 * 0.2 / 150);
    const bool ok = std::abs(a.mean - 0.8) <= 0.02 && std::abs(a.std - sd) <= 0.2 * sd &&
                    a.accuracies == b.accuracies;
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean %.4f std %.4f (target %.4f), report \"%s\", rerun %s", a.mean, a.std,
                  sd, a.formatted().c_str(), a.accuracies == b.accuracies ? "identical" : "differs");
    return {ok, buf};
}

struct FixtureRuns {
    RetrievalReport clean;
    RetrievalReport perturbed;
};

const FixtureRuns& fixture_runs() {
    static const FixtureRuns runs = [] {
        const auto fx = testing::make_synthetic_fixture(100);
        const auto store = load_store(fx.nodes_jsonl, fx.edges_jsonl);
        const HashEmbeddingProvider provider(256);
        const auto diseases = DiseaseIndex::build(store, provider);
        const ScriptedChatProvider chat(fx.script);
        const KgRagPipeline kg(store, diseases, provider, chat, {});
        const SchemaQueryBaseline base(store, chat, {});
        return FixtureRuns{
            run_retrieval_comparison(fx.questions, kg, base, store, Perturbation::none),
            run_retrieval_comparison(fx.questions, kg, base, store, Perturbation::lowercase_entities)};
    }();
    return runs;
}

Outcome robustness() {
    const auto& r = fixture_runs();
    char buf[200];
    std::snprintf(buf, sizeof buf, "kg-rag %.2f -> %.2f, baseline %.2f -> %.2f (100 questions)",
                  r.clean.accuracy_kgrag, r.perturbed.accuracy_kgrag, r.clean.accuracy_baseline,
                  r.perturbed.accuracy_baseline);
    return {r.clean.accuracy_kgrag == r.perturbed.accuracy_kgrag && r.perturbed.accuracy_baseline == 0.0,
            buf};
}

Outcome token_economy() {
    const double pct = reduction_pct(8006, 3693);
    const auto& r = fixture_runs();
    std::size_t wins = 0;
    for (const auto& row : r.clean.rows) wins += row.baseline_usage.prompt_tokens > row.kgrag_usage.prompt_tokens;
    const auto fx = testing::make_synthetic_fixture(1);
    const auto schema = load_store(fx.nodes_jsonl, fx.edges_jsonl).schema();
    const bool spoke = schema.node_types.size() == 28 && schema.edge_types.size() == 91;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "(a) %.2f%%; (b) baseline prompt > kg-rag prompt on %zu/%zu questions, avg %.0f vs %.0f; "
                  "schema %zu node / %zu edge types",
                  pct, wins, r.clean.rows.size(), r.clean.avg_prompt_tokens_baseline,
                  r.clean.avg_prompt_tokens_kgrag, schema.node_types.size(), schema.edge_types.size());
    return {std::abs(pct - 53.9) <= 0.1 && wins == r.clean.rows.size() && !r.clean.rows.empty() && spoke, buf};
}

Outcome context_volume_cap() {
    std::string nodes = R"({"id":"dense","type":"Disease","name":"Dense Syndrome"})" "\n";
    std::string edges;
    for (int i = 0; i < 1000; ++i) {
        const auto g = "DNS" + std::to_string(i);
        nodes += nlohmann::json{{"id", "gene:" + g}, {"type", "Gene"}, {"name", g}}.dump() + "\n";
        edges += nlohmann::json{{"subject", "dense"}, {"predicate", "ASSOCIATES_DaG"}, {"object", "gene:" + g},
                                {"provenance", i % 2 ? "GWAS Catalog" : "DisGeNET"}}
                     .dump() +
                 "\n";
    }
    const auto fx = testing::make_synthetic_fixture(20);
    nodes += fx.nodes_jsonl;
    edges += fx.edges_jsonl;
    const auto store = load_store(nodes, edges);
    const HashEmbeddingProvider provider(256);
    const auto diseases = DiseaseIndex::build(store, provider);
    const std::string dense_q = "Which Gene associates with Disease Dense Syndrome?";
    auto script = fx.script;
    script.insert(script.begin(), {"extract", dense_q, {}, {}, R"({"diseases":["Dense Syndrome"]})", {}});
    const ScriptedChatProvider chat(script);

    std::vector<std::string> questions = {dense_q};
    for (const auto& q : fx.questions) questions.push_back(q.text);
    bool within = true;
    bool monotone = true;
    std::string dense_counts;
    std::vector<long long> last(questions.size(), -1);
    for (std::size_t v : {10u, 100u, 150u, 200u}) {
        PipelineOptions o;
        o.prune.context_volume = v;
        const KgRagPipeline pipeline(store, diseases, provider, chat, o);
        for (std::size_t i = 0; i < questions.size(); ++i) {
            const auto r = pipeline.answer(questions[i]);
            const auto lines = context_lines(r.user_prompt).size();
            within &= lines <= v;
            const auto tokens = estimate_tokens(r.system_prompt) + estimate_tokens(r.user_prompt);
            monotone &= tokens >= last[i];
            last[i] = tokens;
            if (i == 0) dense_counts += (dense_counts.empty() ? "" : ", ") + std::to_string(v) + ":" +
                                        std::to_string(lines) + " lines/" + std::to_string(tokens) + " tok";
        }
    }
    return {within && monotone, "dense disease " + dense_counts + "; 21 questions checked"};
}

Outcome end_to_end_determinism() {
    const auto dir = fs::temp_directory_path() / "kgrag_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = KGRAG_CLI_PATH;
    const std::string config = std::string(KGRAG_DEMO_DIR) + "/config.json";
    const std::string question = "What compound treats obesity in patients with Bardet-Biedl Syndrome?";
    for (const auto* name : {"first.json", "second.json"}) {
        const auto cmd = "\"" + cli + "\" --config \"" + config + "\" --offline --seed 7 ask \"" + question +
                         "\" --output \"" + (dir / name).string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "kgrag ask exited non-zero"};
    }
    const auto a = read_file(dir / "first.json");
    const auto b = read_file(dir / "second.json");
    const auto record = nlohmann::json::parse(a, nullptr, false);
    const bool ok = !a.empty() && a == b && !record.is_discarded() && record.contains("answer_text");
    return {ok, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome sweep_plumbing() {
    const auto fx = testing::make_synthetic_fixture(30);
    const auto store = load_store(fx.nodes_jsonl, fx.edges_jsonl);
    const HashEmbeddingProvider entity(256), small(64, 1), large(384, 2);
    const auto diseases = DiseaseIndex::build(store, entity);
    const ScriptedChatProvider chat(fx.script);
    const std::vector<std::size_t> volumes = {10, 50, 100, 150, 200};
    const auto report = hyperparameter_sweep(fx.sweep_sets, {&small, &large}, volumes,
                                             [&](const EmbeddingProvider& p, std::size_t v) {
                                                 PipelineOptions o;
                                                 o.prune.context_volume = v;
                                                 o.answer_system_prompt = kJsonAnswerSystemPrompt;
                                                 return KgRagPipeline(store, diseases, p, chat, o);
                                             });
    bool all_one = report.results.size() == fx.sweep_sets.size() * 2 * volumes.size();
    for (const auto& cell : report.results) all_one &= cell.mean_jaccard == 1.0;
    const auto curves = report.curves()["curves"];
    bool shaped = curves.size() == fx.sweep_sets.size();
    for (const auto& c : curves) {
        shaped &= c["x"] == "context_volume" && c["y"] == "mean_jaccard" && c["series"].size() == 2;
        for (const auto& s : c["series"]) {
            shaped &= s["points"].size() == volumes.size();
            for (std::size_t i = 0; i < volumes.size() && i < s["points"].size(); ++i)
                shaped &= s["points"][i][0] == volumes[i];
        }
    }
    return {all_one && shaped, std::to_string(report.results.size()) + " cells, all mean Jaccard 1.0: " +
                                   (all_one ? "yes" : "no") + "; curve shape " + (shaped ? "ok" : "wrong")};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "verbalization golden", 1, verbalization_golden},
        {2, "pruning oracle equivalence", 10, pruning_oracle},
        {3, "percentile suite", 1, percentile_suite},
        {4, "vector search exactness", 5, vector_search_exactness},
        {5, "bootstrap statistics", 5, bootstrap_statistics},
        {6, "robustness under lowercased entities", 60, robustness},
        {7, "token economy", 60, token_economy},
        {8, "context-volume cap", 60, context_volume_cap},
        {9, "end-to-end determinism", 60, end_to_end_determinism},
        {10, "jaccard and sweep plumbing", 60, sweep_plumbing},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = outcome.pass && secs < c.budget_s;
        failures += !pass;
        std::printf("%s %2d %s: %s [%.3fs, budget %.0fs]\n", pass ? "PASS" : "FAIL", c.number, c.title,
                    outcome.detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
