#include "kgrag/harness.hpp"

#include "json_lines.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace kgrag {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string_view strip_fence(std::string_view s) {
    s = trim(s);
    if (s.substr(0, 3) != "```") return s;
    const auto body = s.find('\n');
    const auto close = s.rfind("```");
    if (body == std::string_view::npos || close <= body) return s;
    return trim(s.substr(body + 1, close - body - 1));
}

std::optional<json> try_parse(std::string_view text) {
    const auto body = strip_fence(text);
    auto doc = json::parse(body.begin(), body.end(), nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

std::vector<std::string> string_list(const json& value, const char* field, std::size_t line) {
    if (value.is_string()) return {value.get<std::string>()};
    if (!value.is_array()) throw FormatError(std::string(field) + " must be a list of strings", line);
    std::vector<std::string> out;
    for (const auto& v : value) {
        if (!v.is_string())
            throw FormatError(std::string(field) + " must be a list of strings", line);
        out.push_back(v.get<std::string>());
    }
    return out;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double sum = 0;
    for (const double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::tf: return "tf";
        case QuestionKind::mcq: return "mcq";
        case QuestionKind::retrieval: return "retrieval";
    }
    return "?";
}

std::string_view to_string(TfGrade grade) {
    switch (grade) {
        case TfGrade::true_answer: return "true";
        case TfGrade::false_answer: return "false";
        case TfGrade::unparseable: return "unparseable";
    }
    return "?";
}

std::vector<BenchmarkQuestion> load_questions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open question file " + path.string());
    return parse_questions(in);
}

std::vector<BenchmarkQuestion> parse_questions(std::istream& in) {
    std::vector<BenchmarkQuestion> out;
    std::set<std::string> ids;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (detail::is_blank(text)) continue;
        const auto obj = detail::parse_line(text, line);
        if (!obj.is_object()) throw FormatError("expected a JSON object", line);
        BenchmarkQuestion q;
        try {
            const auto& id = obj.at("id");
            q.id = id.is_string() ? id.get<std::string>() : id.dump();
            q.text = obj.at("text").get<std::string>();
            const auto kind = obj.at("kind").get<std::string>();
            if (kind == "tf") q.kind = QuestionKind::tf;
            else if (kind == "mcq") q.kind = QuestionKind::mcq;
            else if (kind == "retrieval") q.kind = QuestionKind::retrieval;
            else throw FormatError("unknown question kind " + kind, line);
        } catch (const json::exception& e) {
            throw FormatError(e.what(), line);
        }
        if (q.id.empty() || !ids.insert(q.id).second)
            throw FormatError("missing or duplicate question id", line);
        if (trim(q.text).empty()) throw FormatError("question text is empty", line);

        const auto answer = obj.find("correct_answer");
        if (const auto it = obj.find("options"); it != obj.end())
            q.options = string_list(*it, "options", line);
        if (const auto it = obj.find("expected_nodes"); it != obj.end())
            q.expected_nodes = string_list(*it, "expected_nodes", line);
        if (const auto it = obj.find("entities"); it != obj.end())
            q.entities = string_list(*it, "entities", line);

        switch (q.kind) {
            case QuestionKind::tf:
                if (answer == obj.end()) throw FormatError("tf question lacks correct_answer", line);
                if (answer->is_boolean()) {
                    q.tf_answer = answer->get<bool>();
                } else if (answer->is_string() && (lower(answer->get<std::string>()) == "true" ||
                                                   lower(answer->get<std::string>()) == "false")) {
                    q.tf_answer = lower(answer->get<std::string>()) == "true";
                } else {
                    throw FormatError("tf correct_answer must be true or false", line);
                }
                break;
            case QuestionKind::mcq: {
                if (answer == obj.end() || !answer->is_string())
                    throw FormatError("mcq correct_answer must be a string", line);
                q.correct_option = answer->get<std::string>();
                if (q.options.size() != 5) throw FormatError("mcq needs exactly five options", line);
                if (std::set<std::string>(q.options.begin(), q.options.end()).size() != 5)
                    throw FormatError("mcq options must be distinct", line);
                if (std::count(q.options.begin(), q.options.end(), q.correct_option) != 1)
                    throw FormatError("mcq correct_answer must be one of the options", line);
                break;
            }
            case QuestionKind::retrieval:
                if (q.expected_nodes.empty() && answer != obj.end())
                    q.expected_nodes = string_list(*answer, "correct_answer", line);
                if (q.expected_nodes.empty())
                    throw FormatError("retrieval question lacks expected_nodes", line);
                break;
        }
        out.push_back(std::move(q));
    }
    return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const auto normalize = [](const std::vector<std::string>& xs) {
        std::set<std::string> out;
        for (const auto& x : xs) out.insert(lower(trim(x)));
        return out;
    };
    const auto sa = normalize(a);
    const auto sb = normalize(b);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& x : sa) common += sb.count(x);
    const auto united = sa.size() + sb.size() - common;
    return static_cast<double>(common) / static_cast<double>(united);
}

std::string BootstrapReport::formatted() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", mean, std);
    return buf;
}

BootstrapReport bootstrap_accuracy(const std::vector<bool>& correctness, std::size_t n_samples,
                                   std::size_t sample_size, std::uint64_t seed) {
    if (correctness.empty()) throw InvalidArgument("bootstrap over an empty correctness list");
    if (n_samples == 0 || sample_size == 0)
        throw InvalidArgument("bootstrap needs positive n_samples and sample_size");
    BootstrapReport report;
    report.n_samples = n_samples;
    report.sample_size = sample_size;
    report.seed = seed;
    report.accuracies.reserve(n_samples);

    SplitMix64 rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < sample_size; ++i) hits += correctness[rng.below(correctness.size())];
        report.accuracies.push_back(static_cast<double>(hits) / static_cast<double>(sample_size));
    }
    report.mean = mean_of(report.accuracies);
    double ss = 0;
    for (const double a : report.accuracies) ss += (a - report.mean) * (a - report.mean);
    report.std = std::sqrt(ss / static_cast<double>(n_samples));
    return report;
}

TfGrade grade_tf(std::string_view reply) {
    const auto from_word = [](std::string_view w) {
        if (w == "true") return TfGrade::true_answer;
        if (w == "false") return TfGrade::false_answer;
        return TfGrade::unparseable;
    };
    if (const auto doc = try_parse(reply); doc && doc->is_object()) {
        if (const auto it = doc->find("answer"); it != doc->end()) {
            if (it->is_boolean())
                return it->get<bool>() ? TfGrade::true_answer : TfGrade::false_answer;
            if (it->is_string()) return from_word(lower(trim(it->get<std::string>())));
        }
        return TfGrade::unparseable;
    }
    std::string norm;
    for (const char ch : reply) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::ispunct(c)) continue;
        norm.push_back(static_cast<char>(std::tolower(c)));
    }
    const auto body = trim(norm);
    const auto end = body.find_first_of(" \t\r\n");
    return from_word(body.substr(0, end));
}

std::optional<std::size_t> grade_mcq(std::string_view reply, std::span<const std::string> options) {
    if (const auto doc = try_parse(reply);
        doc && doc->is_object() && doc->contains("answer") && doc->at("answer").is_string()) {
        const auto inner = doc->at("answer").get<std::string>();
        return grade_mcq(inner, options);
    }

    auto body = trim(reply);
    if (!body.empty() && body.front() == '(') body.remove_prefix(1);
    if (!body.empty() && body.front() >= 'A' && body.front() <= 'E') {
        const auto index = static_cast<std::size_t>(body.front() - 'A');
        const bool delimited = body.size() == 1 || std::string_view(").:,").find(body[1]) !=
                                                       std::string_view::npos;
        if (delimited && index < options.size()) return index;
    }

    const auto text = lower(reply);
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < options.size(); ++i) {
        const auto opt = lower(trim(options[i]));
        if (!opt.empty() && text.find(opt) != std::string::npos) hits.push_back(i);
    }
    // An option found only as part of a longer matched option does not count.
    std::vector<std::size_t> distinct;
    for (const auto i : hits) {
        const auto oi = lower(trim(options[i]));
        const bool nested = std::any_of(hits.begin(), hits.end(), [&](std::size_t j) {
            const auto oj = lower(trim(options[j]));
            return j != i && oj.size() > oi.size() && oj.find(oi) != std::string::npos;
        });
        if (!nested) distinct.push_back(i);
    }
    if (distinct.size() == 1) return distinct.front();
    return std::nullopt;
}

std::optional<std::vector<std::string>> parse_answer_set(std::string_view reply) {
    const auto doc = try_parse(reply);
    if (!doc) return std::nullopt;
    const json* list = nullptr;
    if (doc->is_array()) list = &*doc;
    else if (doc->is_object() && doc->contains("answer")) list = &doc->at("answer");
    if (!list || !list->is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& v : *list) {
        if (!v.is_string()) return std::nullopt;
        out.push_back(v.get<std::string>());
    }
    return out;
}

double reduction_pct(double avg_baseline, double avg_kgrag) {
    if (avg_baseline == 0) throw InvalidArgument("baseline token average is zero");
    return (avg_baseline - avg_kgrag) / avg_baseline * 100.0;
}

std::string perturb_lowercase_entities(const BenchmarkQuestion& question, const KgStore& store) {
    std::vector<std::string> names = question.entities;
    if (names.empty()) {
        for (const auto& n : store.nodes())
            if (n.node_type == "Disease" && question.text.find(n.name) != std::string::npos)
                names.push_back(n.name);
    }
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
    std::string text = question.text;
    for (const auto& name : names) {
        if (name.empty()) continue;
        const auto low = lower(name);
        for (auto pos = text.find(name); pos != std::string::npos;
             pos = text.find(name, pos + low.size()))
            text.replace(pos, name.size(), low);
    }
    return text;
}

const char* const kTrueFalseSystemPrompt =
    "You are a biomedical assistant. Use the provided context when it is relevant. Reply with "
    "True or False as the first word, followed by a one-sentence justification.";

const char* const kMcqSystemPrompt =
    "You are a biomedical assistant. Use the provided context when it is relevant. The question "
    "has five options labeled A to E and exactly one is correct. Reply with the letter of the "
    "correct option only.";

const char* const kJsonAnswerSystemPrompt =
    "You are a biomedical assistant. Answer using only the provided context. Reply with JSON "
    "only, of the form {\"answer\": [\"<name>\", ...]}, listing every entity that answers the "
    "question.";

std::string format_mcq_prompt(const BenchmarkQuestion& q) {
    std::string out = q.text + "\nOptions:";
    for (std::size_t i = 0; i < q.options.size(); ++i)
        out += "\n" + std::string(1, static_cast<char>('A' + i)) + ") " + q.options[i];
    return out;
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (const char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

json ChoiceReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"id", r.id},
                             {"expected", r.expected},
                             {"graded", r.graded},
                             {"correct", r.correct},
                             {"usage", kgrag::to_json(r.usage)}});
    return {{"kind", std::string(to_string(kind))},
            {"n_questions", rows.size()},
            {"accuracy", accuracy},
            {"bootstrap",
             {{"n_samples", bootstrap.n_samples},
              {"sample_size", bootstrap.sample_size},
              {"seed", bootstrap.seed},
              {"mean", bootstrap.mean},
              {"std", bootstrap.std},
              {"formatted", bootstrap.formatted()},
              {"accuracies", bootstrap.accuracies}}},
            {"config_snapshot", config_snapshot},
            {"questions", std::move(rows_json)}};
}

void ChoiceReport::write_csv(std::ostream& out) const {
    out << "id,kind,expected,graded,correct,prompt_tokens,completion_tokens,total_tokens\n";
    for (const auto& r : rows)
        out << csv_field(r.id) << ',' << to_string(kind) << ',' << csv_field(r.expected) << ','
            << csv_field(r.graded) << ',' << (r.correct ? "true" : "false") << ','
            << r.usage.prompt_tokens << ',' << r.usage.completion_tokens << ','
            << r.usage.total_tokens << '\n';
}

ChoiceReport run_choice_benchmark(const std::vector<BenchmarkQuestion>& questions,
                                  const AnswerFn& answer, std::uint64_t seed,
                                  std::size_t n_samples, std::size_t sample_size) {
    if (questions.empty()) throw InvalidArgument("benchmark dataset is empty");
    ChoiceReport report;
    report.kind = questions.front().kind;
    if (report.kind == QuestionKind::retrieval)
        throw InvalidArgument("retrieval questions belong to the retrieval comparison");

    for (const auto& q : questions) {
        if (q.kind != report.kind) throw InvalidArgument("mixed question kinds in one benchmark");
        ChoiceRow row;
        row.id = q.id;
        if (q.kind == QuestionKind::tf) {
            const auto record = answer(q.text);
            const auto grade = grade_tf(record.answer_text);
            row.expected = q.tf_answer ? "true" : "false";
            row.graded = std::string(to_string(grade));
            row.correct = grade == (q.tf_answer ? TfGrade::true_answer : TfGrade::false_answer);
            row.usage = record.usage;
            if (report.config_snapshot.is_null()) report.config_snapshot = to_json(record.config_snapshot);
        } else {
            const auto record = answer(format_mcq_prompt(q));
            const auto choice = grade_mcq(record.answer_text, q.options);
            row.expected = q.correct_option;
            row.graded = choice ? q.options[*choice] : "unparseable";
            row.correct = choice && q.options[*choice] == q.correct_option;
            row.usage = record.usage;
            if (report.config_snapshot.is_null()) report.config_snapshot = to_json(record.config_snapshot);
        }
        report.rows.push_back(std::move(row));
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ChoiceRow& a, const ChoiceRow& b) { return a.id < b.id; });

    std::vector<bool> correctness;
    std::size_t hits = 0;
    for (const auto& r : report.rows) {
        correctness.push_back(r.correct);
        hits += r.correct;
    }
    report.accuracy = static_cast<double>(hits) / static_cast<double>(report.rows.size());
    report.bootstrap = bootstrap_accuracy(correctness, n_samples, sample_size, seed);
    return report;
}

bool retrieval_correct(const std::vector<std::string>& expected,
                       const std::vector<ContextSentence>& retrieved) {
    std::vector<std::string> texts;
    texts.reserve(retrieved.size());
    for (const auto& s : retrieved) texts.push_back(lower(s.text));
    return std::all_of(expected.begin(), expected.end(), [&](const std::string& name) {
        const auto needle = lower(trim(name));
        return std::any_of(texts.begin(), texts.end(), [&](const std::string& t) {
            return t.find(needle) != std::string::npos;
        });
    });
}

json RetrievalReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"id", r.id},
                             {"question", r.question},
                             {"kgrag_correct", r.kgrag_correct},
                             {"baseline_correct", r.baseline_correct},
                             {"kgrag_usage", kgrag::to_json(r.kgrag_usage)},
                             {"baseline_usage", kgrag::to_json(r.baseline_usage)}});
    return {{"perturb", perturb == Perturbation::none ? "none" : "lowercase_entities"},
            {"n_questions", rows.size()},
            {"accuracy_kgrag", accuracy_kgrag},
            {"accuracy_baseline", accuracy_baseline},
            {"avg_tokens_kgrag", avg_tokens_kgrag},
            {"avg_tokens_baseline", avg_tokens_baseline},
            {"avg_prompt_tokens_kgrag", avg_prompt_tokens_kgrag},
            {"avg_prompt_tokens_baseline", avg_prompt_tokens_baseline},
            {"reduction_pct", reduction_pct},
            {"config_snapshot", config_snapshot},
            {"questions", std::move(rows_json)}};
}

void RetrievalReport::write_csv(std::ostream& out) const {
    out << "id,kgrag_correct,baseline_correct,kgrag_prompt_tokens,kgrag_total_tokens,"
           "baseline_prompt_tokens,baseline_total_tokens\n";
    for (const auto& r : rows)
        out << csv_field(r.id) << ',' << (r.kgrag_correct ? "true" : "false") << ','
            << (r.baseline_correct ? "true" : "false") << ',' << r.kgrag_usage.prompt_tokens << ','
            << r.kgrag_usage.total_tokens << ',' << r.baseline_usage.prompt_tokens << ','
            << r.baseline_usage.total_tokens << '\n';
}

RetrievalReport run_retrieval_comparison(const std::vector<BenchmarkQuestion>& dataset,
                                         const KgRagPipeline& kgrag,
                                         const SchemaQueryBaseline& baseline,
                                         const KgStore& store, Perturbation perturb) {
    if (dataset.empty()) throw InvalidArgument("retrieval dataset is empty");
    RetrievalReport report;
    report.perturb = perturb;

    for (const auto& q : dataset) {
        RetrievalRow row;
        row.id = q.id;
        row.question =
            perturb == Perturbation::lowercase_entities ? perturb_lowercase_entities(q, store) : q.text;
        const auto kg = kgrag.answer(row.question);
        const auto base = baseline.run(row.question);
        row.kgrag_correct = retrieval_correct(q.expected_nodes, kg.contexts_used);
        row.baseline_correct = retrieval_correct(q.expected_nodes, base.contexts_used);
        row.kgrag_usage = kg.usage;
        row.baseline_usage = base.usage;
        if (report.config_snapshot.is_null()) report.config_snapshot = to_json(kg.config_snapshot);
        report.rows.push_back(std::move(row));
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const RetrievalRow& a, const RetrievalRow& b) { return a.id < b.id; });

    const auto n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
        report.accuracy_kgrag += r.kgrag_correct;
        report.accuracy_baseline += r.baseline_correct;
        report.avg_tokens_kgrag += static_cast<double>(r.kgrag_usage.total_tokens);
        report.avg_tokens_baseline += static_cast<double>(r.baseline_usage.total_tokens);
        report.avg_prompt_tokens_kgrag += static_cast<double>(r.kgrag_usage.prompt_tokens);
        report.avg_prompt_tokens_baseline += static_cast<double>(r.baseline_usage.prompt_tokens);
    }
    report.accuracy_kgrag /= n;
    report.accuracy_baseline /= n;
    report.avg_tokens_kgrag /= n;
    report.avg_tokens_baseline /= n;
    report.avg_prompt_tokens_kgrag /= n;
    report.avg_prompt_tokens_baseline /= n;
    report.reduction_pct = kgrag::reduction_pct(report.avg_tokens_baseline, report.avg_tokens_kgrag);
    return report;
}

json SweepReport::curves() const {
    json out = json::array();
    std::vector<std::string> sets;
    for (const auto& r : results)
        if (std::find(sets.begin(), sets.end(), r.prompt_set) == sets.end()) sets.push_back(r.prompt_set);
    for (const auto& set : sets) {
        std::vector<std::string> providers;
        std::map<std::string, std::vector<std::pair<std::size_t, double>>> points;
        for (const auto& r : results) {
            if (r.prompt_set != set) continue;
            if (!points.count(r.provider_name)) providers.push_back(r.provider_name);
            points[r.provider_name].emplace_back(r.context_volume, r.mean_jaccard);
        }
        json series = json::array();
        for (const auto& p : providers) {
            auto pts = points[p];
            std::sort(pts.begin(), pts.end());
            json arr = json::array();
            for (const auto& [v, m] : pts) arr.push_back({v, m});
            series.push_back({{"provider", p}, {"points", std::move(arr)}});
        }
        out.push_back({{"prompt_set", set},
                       {"x", "context_volume"},
                       {"y", "mean_jaccard"},
                       {"series", std::move(series)}});
    }
    return {{"curves", std::move(out)}};
}

json SweepReport::to_json() const {
    json cells = json::array();
    for (const auto& r : results) {
        json scores = json::array();
        for (const auto& s : r.per_prompt) {
            json item = {{"id", s.id}, {"jaccard", s.jaccard}};
            if (!s.diagnostic.empty()) item["diagnostic"] = s.diagnostic;
            scores.push_back(std::move(item));
        }
        cells.push_back({{"prompt_set", r.prompt_set},
                         {"provider", r.provider_name},
                         {"context_volume", r.context_volume},
                         {"mean_jaccard", r.mean_jaccard},
                         {"per_prompt", std::move(scores)}});
    }
    auto out = curves();
    out["cells"] = std::move(cells);
    return out;
}

void SweepReport::write_csv(std::ostream& out) const {
    out << "prompt_set,provider,context_volume,mean_jaccard\n";
    for (const auto& r : results)
        out << csv_field(r.prompt_set) << ',' << csv_field(r.provider_name) << ','
            << r.context_volume << ',' << r.mean_jaccard << '\n';
}

SweepReport hyperparameter_sweep(const std::vector<SweepPromptSet>& prompt_sets,
                                 const std::vector<const EmbeddingProvider*>& providers,
                                 const std::vector<std::size_t>& volumes,
                                 const PipelineFactory& factory) {
    if (prompt_sets.empty() || providers.empty() || volumes.empty())
        throw InvalidArgument("sweep needs prompt sets, providers and volumes");
    SweepReport report;
    for (const auto& set : prompt_sets) {
        if (set.prompts.empty()) throw InvalidArgument("prompt set " + set.label + " is empty");
        for (const auto* provider : providers) {
            for (const auto volume : volumes) {
                const auto pipeline = factory(*provider, volume);
                SweepResult cell{set.label, provider->name(), volume, 0, {}};
                std::vector<double> scores;
                for (const auto& prompt : set.prompts) {
                    const auto record = pipeline.answer(prompt.text);
                    PromptScore score{prompt.id, 0, {}};
                    if (const auto answers = parse_answer_set(record.answer_text))
                        score.jaccard = jaccard(*answers, prompt.expected_nodes);
                    else
                        score.diagnostic = "unparseable answer JSON: " + record.answer_text;
                    scores.push_back(score.jaccard);
                    cell.per_prompt.push_back(std::move(score));
                }
                cell.mean_jaccard = mean_of(scores);
                report.results.push_back(std::move(cell));
            }
        }
    }
    return report;
}

}  // namespace kgrag
