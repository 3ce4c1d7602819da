#pragma once

#include "kgrag/context_builder.hpp"
#include "kgrag/semantic_index.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct PruneConfig {
    std::size_t context_volume = 150;
    double min_similarity = 0.5;
    double percentile = 75.0;

    void validate() const;
};

struct PrunedContext {
    std::vector<ContextSentence> sentences;                // similarity always set
    std::map<std::string, double> per_disease_thresholds;  // disease node id -> percentile value

    bool empty() const { return sentences.empty(); }
};

// Linear interpolation between closest ranks, rank = p/100 * (n-1) on sorted values.
double percentile(std::span<const double> values, double p);

// Positions of the values that pass both conditions: strictly above the p-th
// percentile of `similarities` and at least `min_similarity`.
std::vector<std::size_t> select_above_percentile(std::span<const double> similarities,
                                                 double p, double min_similarity);

// Prompt-aware pruning. `contexts` maps disease node id -> its sentences (each
// list non-empty). Output is capped at context_volume with an even per-disease
// share, topped up from the best leftovers, and sorted by similarity descending.
PrunedContext prune(std::string_view prompt,
                    const std::map<std::string, std::vector<ContextSentence>>& contexts,
                    const EmbeddingProvider& provider, const PruneConfig& config);

// Same selection with the prompt/sentence similarities already computed
// (scores[d][i] belongs to contexts[d][i]).
PrunedContext prune_scored(const std::map<std::string, std::vector<ContextSentence>>& contexts,
                           const std::map<std::string, std::vector<double>>& scores,
                           const PruneConfig& config);

}  // namespace kgrag
