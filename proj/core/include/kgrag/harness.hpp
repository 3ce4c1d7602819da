#pragma once

#include "kgrag/baseline.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/pipeline.hpp"
#include "kgrag/semantic_index.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

// ---------------------------------------------------------------------------
// Datasets

enum class QuestionKind { tf, mcq, retrieval };

std::string_view to_string(QuestionKind kind);

struct BenchmarkQuestion {
    std::string id;
    QuestionKind kind = QuestionKind::tf;
    std::string text;
    bool tf_answer = false;            // tf
    std::string correct_option;        // mcq
    std::vector<std::string> options;  // mcq: exactly five, distinct
    std::vector<std::string> expected_nodes;  // retrieval / sweep ground truth
    std::vector<std::string> entities;        // optional: names the perturbation lowercases
};

// questions.jsonl: {"id","kind","text","correct_answer","options"?,"expected_nodes"?,"entities"?}
std::vector<BenchmarkQuestion> load_questions(const std::filesystem::path& path);
std::vector<BenchmarkQuestion> parse_questions(std::istream& in);

// ---------------------------------------------------------------------------
// Scoring primitives

// |A∩B| / |A∪B| after trimming and lowercasing elements; 1.0 when both are empty.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct BootstrapReport {
    std::size_t n_samples = 0;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> accuracies;
    double mean = 0;
    double std = 0;  // population standard deviation of `accuracies`

    std::string formatted() const;  // "0.80 ± 0.03"
};

// n_samples draws of sample_size items with replacement (SplitMix64 seeded with `seed`).
BootstrapReport bootstrap_accuracy(const std::vector<bool>& correctness,
                                   std::size_t n_samples = 1000, std::size_t sample_size = 150,
                                   std::uint64_t seed = 0);

enum class TfGrade { true_answer, false_answer, unparseable };

std::string_view to_string(TfGrade grade);

TfGrade grade_tf(std::string_view reply);

// Index of the chosen option, or nullopt when the reply is unparseable or ambiguous.
std::optional<std::size_t> grade_mcq(std::string_view reply, std::span<const std::string> options);

// Parses {"answer": [...]} or a bare JSON array of strings (``` fences allowed).
std::optional<std::vector<std::string>> parse_answer_set(std::string_view reply);

double reduction_pct(double avg_baseline, double avg_kgrag);

// Lowercases the question's entity names: its `entities` list when present,
// otherwise every Disease-node name occurring in the text (longest first).
std::string perturb_lowercase_entities(const BenchmarkQuestion& question, const KgStore& store);

// ---------------------------------------------------------------------------
// Prompts used by the benchmark runs

extern const char* const kTrueFalseSystemPrompt;
extern const char* const kMcqSystemPrompt;
extern const char* const kJsonAnswerSystemPrompt;

// Question text followed by "Options:" and "A) ..." .. "E) ..." lines.
std::string format_mcq_prompt(const BenchmarkQuestion& question);

// ---------------------------------------------------------------------------
// True/False and MCQ benchmarks

struct ChoiceRow {
    std::string id;
    std::string expected;
    std::string graded;
    bool correct = false;
    TokenUsage usage;
};

struct ChoiceReport {
    QuestionKind kind = QuestionKind::tf;
    std::vector<ChoiceRow> rows;  // sorted by question id
    double accuracy = 0;
    BootstrapReport bootstrap;
    nlohmann::json config_snapshot;

    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

using AnswerFn = std::function<AnswerRecord(std::string_view prompt)>;

// All questions must be of one kind (tf or mcq).
ChoiceReport run_choice_benchmark(const std::vector<BenchmarkQuestion>& questions,
                                  const AnswerFn& answer, std::uint64_t seed,
                                  std::size_t n_samples = 1000, std::size_t sample_size = 150);

// ---------------------------------------------------------------------------
// KG-RAG vs schema-in-prompt retrieval comparison

enum class Perturbation { none, lowercase_entities };

struct RetrievalRow {
    std::string id;
    std::string question;  // as sent (after perturbation)
    bool kgrag_correct = false;
    bool baseline_correct = false;
    TokenUsage kgrag_usage;
    TokenUsage baseline_usage;
};

struct RetrievalReport {
    Perturbation perturb = Perturbation::none;
    std::vector<RetrievalRow> rows;  // sorted by question id
    double accuracy_kgrag = 0;
    double accuracy_baseline = 0;
    double avg_tokens_kgrag = 0;
    double avg_tokens_baseline = 0;
    double avg_prompt_tokens_kgrag = 0;
    double avg_prompt_tokens_baseline = 0;
    double reduction_pct = 0;
    nlohmann::json config_snapshot;

    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

// Every expected name occurs (case-insensitively) in some retrieved sentence.
bool retrieval_correct(const std::vector<std::string>& expected,
                       const std::vector<ContextSentence>& retrieved);

RetrievalReport run_retrieval_comparison(const std::vector<BenchmarkQuestion>& dataset,
                                         const KgRagPipeline& kgrag,
                                         const SchemaQueryBaseline& baseline,
                                         const KgStore& store, Perturbation perturb);

// ---------------------------------------------------------------------------
// Hyperparameter sweep (context embedding model x context volume)

struct SweepPromptSet {
    std::string label;  // e.g. "single-disease", "two-disease"
    std::vector<BenchmarkQuestion> prompts;  // expected_nodes is the ground-truth answer set
};

struct PromptScore {
    std::string id;
    double jaccard = 0;
    std::string diagnostic;
};

struct SweepResult {
    std::string prompt_set;
    std::string provider_name;
    std::size_t context_volume = 0;
    double mean_jaccard = 0;
    std::vector<PromptScore> per_prompt;
};

struct SweepReport {
    std::vector<SweepResult> results;

    // {"curves": [{"prompt_set", "x": "context_volume", "y": "mean_jaccard",
    //              "series": [{"provider", "points": [[volume, mean], ...]}]}]}
    nlohmann::json curves() const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

// Builds a pipeline for a (context provider, context volume) cell. Pipelines should
// use kJsonAnswerSystemPrompt so replies parse as answer sets.
using PipelineFactory =
    std::function<KgRagPipeline(const EmbeddingProvider& context_provider, std::size_t volume)>;

SweepReport hyperparameter_sweep(const std::vector<SweepPromptSet>& prompt_sets,
                                 const std::vector<const EmbeddingProvider*>& providers,
                                 const std::vector<std::size_t>& volumes,
                                 const PipelineFactory& factory);

// CSV field quoting (RFC 4180).
std::string csv_field(std::string_view value);

}  // namespace kgrag
