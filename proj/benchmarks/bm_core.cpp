#include <kgrag/context_builder.hpp>
#include <kgrag/context_pruner.hpp>
#include <kgrag/semantic_index.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace kgrag;

namespace {

VectorIndex random_index(std::size_t n, std::size_t dim) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<IndexEntry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        EmbeddingVector v(dim);
        for (auto& x : v) x = nd(rng);
        entries.push_back({"item" + std::to_string(i), "", std::move(v)});
    }
    return VectorIndex::from_entries("random", dim, std::move(entries));
}

}  // namespace

static void BM_IndexSearch(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const auto index = random_index(n, 384);
    const auto query = index.entries().front().vector;
    for (auto _ : state) benchmark::DoNotOptimize(index.search(query, k));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_IndexSearch)->Args({1000, 1})->Args({1000, 50})->Args({20000, 5})->Args({20000, 150});

static void BM_HashEmbed(benchmark::State& state) {
    const HashEmbeddingProvider provider(static_cast<std::size_t>(state.range(0)));
    const std::string text = "Disease hypertension associates Gene VHL. Provenance: GWAS Catalog.";
    for (auto _ : state) benchmark::DoNotOptimize(provider.embed(text));
}
BENCHMARK(BM_HashEmbed)->Arg(64)->Arg(384);

static void BM_Verbalize(benchmark::State& state) {
    const Triple t{{"d1", "Disease", "hypertension", {}}, "ASSOCIATES_DaG", {"g1", "Gene", "VHL", {}},
                   "GWAS Catalog", {{"p-value", "3e-8"}}, Direction::outgoing};
    const bool evidence = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(verbalize_triple(t, evidence));
}
BENCHMARK(BM_Verbalize)->Arg(0)->Arg(1);

static void BM_PruneScored(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::map<std::string, std::vector<ContextSentence>> contexts;
    std::map<std::string, std::vector<double>> scores;
    for (const auto* disease : {"d1", "d2"}) {
        for (std::size_t i = 0; i < n; ++i) {
            contexts[disease].push_back({"sentence " + std::to_string(i), {}, disease, {}});
            scores[disease].push_back(u(rng));
        }
    }
    PruneConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(prune_scored(contexts, scores, cfg));
}
BENCHMARK(BM_PruneScored)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_PruneWithEmbedding(benchmark::State& state) {
    const HashEmbeddingProvider provider(384);
    std::map<std::string, std::vector<ContextSentence>> contexts;
    for (int i = 0; i < state.range(0); ++i)
        contexts["d1"].push_back({"Disease hypertension associates Gene G" + std::to_string(i) +
                                      ". Provenance: GWAS Catalog.",
                                  {}, "d1", {}});
    for (auto _ : state)
        benchmark::DoNotOptimize(
            prune("Which genes are associated with hypertension?", contexts, provider, PruneConfig{}));
}
BENCHMARK(BM_PruneWithEmbedding)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
