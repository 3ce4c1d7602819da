#include "kgrag/context_pruner.hpp"

#include "kgrag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace kgrag {

void PruneConfig::validate() const {
    if (!(percentile > 0 && percentile < 100))
        throw InvalidArgument("percentile must lie strictly between 0 and 100");
    if (!(min_similarity >= -1 && min_similarity <= 1))
        throw InvalidArgument("min_similarity must lie in [-1, 1]");
    if (context_volume < 1) throw InvalidArgument("context_volume must be at least 1");
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw InvalidArgument("percentile of an empty list");
    if (!(p >= 0 && p <= 100)) throw InvalidArgument("percentile rank must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= sorted.size() || frac == 0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<std::size_t> select_above_percentile(std::span<const double> similarities, double p,
                                                 double min_similarity) {
    std::vector<std::size_t> kept;
    if (similarities.empty()) return kept;
    const double threshold = percentile(similarities, p);
    for (std::size_t i = 0; i < similarities.size(); ++i)
        if (similarities[i] > threshold && similarities[i] >= min_similarity) kept.push_back(i);
    return kept;
}

namespace {

bool ranks_before(const ContextSentence& a, const ContextSentence& b) {
    if (*a.similarity != *b.similarity) return *a.similarity > *b.similarity;
    if (a.text != b.text) return a.text < b.text;
    return a.disease_node_id < b.disease_node_id;
}

}  // namespace

PrunedContext prune_scored(const std::map<std::string, std::vector<ContextSentence>>& contexts,
                           const std::map<std::string, std::vector<double>>& scores,
                           const PruneConfig& config) {
    config.validate();
    if (contexts.empty()) throw InvalidArgument("prune: no disease contexts given");

    PrunedContext out;
    std::vector<std::vector<ContextSentence>> kept_per_disease;
    std::size_t total = 0;
    for (const auto& [disease, sentences] : contexts) {
        if (sentences.empty())
            throw InvalidArgument("prune: disease " + disease + " has no context sentences");
        const auto it = scores.find(disease);
        if (it == scores.end() || it->second.size() != sentences.size())
            throw InvalidArgument("prune: similarity scores do not cover disease " + disease);
        const auto& sims = it->second;
        out.per_disease_thresholds[disease] = percentile(sims, config.percentile);

        std::vector<ContextSentence> kept;
        for (const auto i : select_above_percentile(sims, config.percentile, config.min_similarity)) {
            auto s = sentences[i];
            s.similarity = sims[i];
            if (s.disease_node_id.empty()) s.disease_node_id = disease;
            kept.push_back(std::move(s));
        }
        std::sort(kept.begin(), kept.end(), ranks_before);
        total += kept.size();
        kept_per_disease.push_back(std::move(kept));
    }

    if (total <= config.context_volume) {
        for (auto& kept : kept_per_disease)
            for (auto& s : kept) out.sentences.push_back(std::move(s));
    } else {
        const std::size_t share = config.context_volume / kept_per_disease.size();
        std::vector<ContextSentence> residue;
        for (auto& kept : kept_per_disease) {
            const auto take = std::min(share, kept.size());
            for (std::size_t i = 0; i < kept.size(); ++i)
                (i < take ? out.sentences : residue).push_back(std::move(kept[i]));
        }
        std::sort(residue.begin(), residue.end(), ranks_before);
        const auto room = config.context_volume - out.sentences.size();
        for (std::size_t i = 0; i < room && i < residue.size(); ++i)
            out.sentences.push_back(std::move(residue[i]));
    }
    std::sort(out.sentences.begin(), out.sentences.end(), ranks_before);
    return out;
}

PrunedContext prune(std::string_view prompt,
                    const std::map<std::string, std::vector<ContextSentence>>& contexts,
                    const EmbeddingProvider& provider, const PruneConfig& config) {
    config.validate();
    if (contexts.empty()) throw InvalidArgument("prune: no disease contexts given");

    // Each distinct sentence text is embedded once.
    std::vector<std::string> texts;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& [disease, sentences] : contexts)
        for (const auto& s : sentences)
            if (slot.emplace(s.text, texts.size()).second) texts.push_back(s.text);

    const auto prompt_vec = provider.embed(prompt);
    const auto vectors = provider.embed_batch(texts);

    std::map<std::string, std::vector<double>> scores;
    for (const auto& [disease, sentences] : contexts) {
        auto& sims = scores[disease];
        for (const auto& s : sentences)
            sims.push_back(cosine_similarity(prompt_vec, vectors[slot.at(s.text)]));
    }
    return prune_scored(contexts, scores, config);
}

}  // namespace kgrag
