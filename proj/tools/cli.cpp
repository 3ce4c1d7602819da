#include "cli.hpp"

#include "app_config.hpp"

#include <kgrag/baseline.hpp>
#include <kgrag/entity_recognition.hpp>
#include <kgrag/errors.hpp>
#include <kgrag/harness.hpp>
#include <kgrag/kg_store.hpp>
#include <kgrag/pipeline.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace kgrag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kDefaultVolume = 150;
constexpr std::size_t kTrueFalseVolume = 100;

struct Runtime {
    AppConfig cfg;
    KgStore store;
    std::unique_ptr<EmbeddingProvider> entity_provider;
    std::unique_ptr<EmbeddingProvider> context_provider;
    std::unique_ptr<ChatProvider> chat;
    std::optional<DiseaseIndex> diseases;
};

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

std::unique_ptr<Runtime> load_runtime(const AppConfig& cfg, bool with_chat, bool with_index) {
    auto rt = std::make_unique<Runtime>();
    rt->cfg = cfg;
    staged("ingest", [&] { rt->store.ingest(cfg.nodes_path, cfg.edges_path); });
    rt->entity_provider = make_embedding_provider(cfg.entity_embedding);
    rt->context_provider = make_embedding_provider(cfg.context_embedding);
    if (with_chat) rt->chat = staged("chat-setup", [&] { return make_chat_provider(cfg.chat); });
    if (with_index) {
        staged("index", [&] {
            if (!cfg.index_path.empty() && fs::exists(cfg.index_path)) {
                auto index = VectorIndex::load(cfg.index_path, rt->entity_provider->name());
                rt->diseases.emplace(DiseaseIndex::adopt(rt->store, *rt->entity_provider, std::move(index)));
            } else {
                rt->diseases.emplace(DiseaseIndex::build(rt->store, *rt->entity_provider));
            }
        });
    }
    return rt;
}

std::size_t effective_volume(const AppConfig& cfg, std::size_t fallback) {
    return cfg.context_volume_set ? cfg.prune.context_volume : fallback;
}

PipelineOptions pipeline_options(const AppConfig& cfg, std::size_t volume,
                                 std::string system_prompt = kAnswerSystemPrompt) {
    PipelineOptions opts;
    opts.prune = cfg.prune;
    opts.prune.context_volume = volume;
    opts.chat = cfg.chat.config;
    opts.include_evidence = cfg.evidence;
    opts.answer_system_prompt = std::move(system_prompt);
    return opts;
}

json run_snapshot(const AppConfig& cfg, std::size_t volume) {
    auto snap = cfg.snapshot();
    snap["prune"]["context_volume"] = volume;
    return snap;
}

void print_answer(std::ostream& out, const AnswerRecord& r) {
    out << "Answer:\n" << r.answer_text << "\n\n";
    out << "Diseases:";
    if (r.entities.empty()) out << " (none)";
    for (const auto& e : r.entities) out << "\n  " << e.node.name << " [" << e.node.node_id << "]";
    out << "\n\nContext (" << r.contexts_used.size() << "):";
    for (const auto& s : r.contexts_used) out << "\n  " << s.text;
    std::set<std::string> provenance;
    for (const auto& s : r.contexts_used) provenance.insert(s.source_triple.provenance);
    out << "\n\nProvenance:";
    if (provenance.empty()) out << " (none)";
    for (const auto& p : provenance) out << "\n  - " << p;
    out << "\n\nTokens: prompt=" << r.usage.prompt_tokens
        << " completion=" << r.usage.completion_tokens << " total=" << r.usage.total_tokens
        << (r.usage.estimated ? " (estimated)" : "") << '\n';
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
}

template <typename Report>
void write_reports(const fs::path& dir, const Report& report, std::ostream& out) {
    fs::create_directories(dir);
    write_file(dir / "report.json", report.to_json().dump(2) + "\n");
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    if (!csv) throw Error("cannot write " + (dir / "report.csv").string());
    report.write_csv(csv);
    out << "wrote " << (dir / "report.json").string() << " and "
        << (dir / "report.csv").string() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"Knowledge-graph retrieval-augmented generation", "kgrag"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::string> nodes, edges, chat_script, evidence, perturb;
    std::optional<std::size_t> volume;
    std::optional<double> min_sim;
    std::optional<std::uint64_t> seed;
    bool offline = false;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--graph-nodes", nodes, "nodes.jsonl");
    app.add_option("--graph-edges", edges, "edges.jsonl");
    app.add_option("--context-volume", volume, "Maximum context sentences sent to the model")
        ->check(CLI::PositiveNumber);
    app.add_option("--min-similarity", min_sim, "Similarity floor for context pruning")
        ->check(CLI::Range(-1.0, 1.0));
    app.add_option("-e,--evidence", evidence, "Append edge evidence to context (true|false)")
        ->check(CLI::IsMember({"true", "false"}, CLI::ignore_case));
    app.add_option("--seed", seed, "Seed for bootstrap resampling");
    app.add_option("--chat-script", chat_script, "Reply script for the scripted chat provider");
    app.add_flag("--offline", offline, "Use only scripted chat and hash embeddings");
    app.add_option("--perturb", perturb, "Question perturbation for bench retrieval")
        ->check(CLI::IsMember({"none", "lowercase", "lowercase_entities"}));

    auto* ingest_cmd = app.add_subcommand("ingest", "Load the graph and report counts");
    bool show_schema = false;
    ingest_cmd->add_flag("--schema", show_schema, "Print the graph schema listing");

    auto* index_cmd = app.add_subcommand("build-index", "Embed Disease names into an index file");
    std::string index_out;
    index_cmd->add_option("--out", index_out, "Index path (defaults to the configured index)");

    auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
    std::string question;
    std::string record_out;
    bool as_json = false;
    ask_cmd->add_option("question", question, "Question text")->required();
    ask_cmd->add_option("--output", record_out, "Write the AnswerRecord JSON here");
    ask_cmd->add_flag("--json", as_json, "Print the AnswerRecord JSON instead of text");

    auto* repl_cmd = app.add_subcommand("repl", "Interactive question loop");

    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark dataset");
    std::string bench_kind;
    std::string dataset;
    std::string out_dir = ".";
    std::size_t samples = 1000, sample_size = 150;
    bench_cmd->add_option("kind", bench_kind, "tf | mcq | retrieval")
        ->required()
        ->check(CLI::IsMember({"tf", "mcq", "retrieval"}));
    bench_cmd->add_option("--dataset", dataset, "questions.jsonl")->required();
    bench_cmd->add_option("--out-dir", out_dir, "Directory for report.json and report.csv");
    bench_cmd->add_option("--samples", samples, "Bootstrap draws")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--sample-size", sample_size, "Questions per bootstrap draw")
        ->check(CLI::PositiveNumber);

    auto* sweep_cmd = app.add_subcommand("sweep", "Context volume x embedding model sweep");
    std::string single_set, two_set;
    std::vector<std::size_t> volumes;
    std::string sweep_out = ".";
    sweep_cmd->add_option("--single", single_set, "Single-disease validation prompts");
    sweep_cmd->add_option("--two", two_set, "Two-disease validation prompts");
    sweep_cmd->add_option("--volumes", volumes, "Context volumes")->delimiter(',');
    sweep_cmd->add_option("--out-dir", sweep_out, "Directory for report.json and report.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        Overrides ov;
        if (nodes) ov.nodes_path = *nodes;
        if (edges) ov.edges_path = *edges;
        ov.context_volume = volume;
        ov.min_similarity = min_sim;
        if (evidence) ov.evidence = CLI::detail::to_lower(*evidence) == "true";
        ov.seed = seed;
        if (chat_script) ov.chat_script = *chat_script;
        ov.offline = offline;
        std::optional<fs::path> cfg_file;
        if (config_path) cfg_file = *config_path;
        const auto cfg = load_config(cfg_file, ov);

        if (*ingest_cmd) {
            KgStore store;
            const auto counts =
                staged("ingest", [&] { return store.ingest(cfg.nodes_path, cfg.edges_path); });
            const auto schema = store.schema();
            out << "nodes: " << counts.node_count << "\nedges: " << counts.edge_count
                << "\nnode types: " << schema.node_types.size()
                << "\nedge types: " << schema.edge_types.size() << '\n';
            if (show_schema) out << serialize_schema(schema);
            return 0;
        }

        if (*index_cmd) {
            const fs::path target = index_out.empty() ? cfg.index_path : fs::path(index_out);
            if (target.empty()) throw ConfigError("no index path (set \"index\" or pass --out)");
            auto rt = load_runtime(cfg, false, false);
            auto diseases = staged("index", [&] {
                return DiseaseIndex::build(rt->store, *rt->entity_provider);
            });
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            diseases.index().save(target);
            out << "indexed " << diseases.size() << " Disease nodes with "
                << rt->entity_provider->name() << " -> " << target.string() << '\n';
            return 0;
        }

        if (*ask_cmd || *repl_cmd) {
            auto rt = load_runtime(cfg, true, true);
            const KgRagPipeline pipeline(rt->store, *rt->diseases, *rt->context_provider, *rt->chat,
                                         pipeline_options(cfg, effective_volume(cfg, kDefaultVolume)));
            if (*ask_cmd) {
                const auto record = pipeline.answer(question);
                const auto text = to_json(record).dump(2) + "\n";
                if (!record_out.empty()) write_file(record_out, text);
                if (as_json) out << text;
                else print_answer(out, record);
                return 0;
            }
            std::string line;
            out << "kgrag> " << std::flush;
            while (std::getline(in, line)) {
                if (line == "exit" || line == "quit") break;
                if (line.find_first_not_of(" \t\r") != std::string::npos) {
                    try {
                        print_answer(out, pipeline.answer(line));
                    } catch (const StageError& e) {
                        err << "error [" << e.stage() << "]: " << e.what() << '\n';
                    }
                }
                out << "kgrag> " << std::flush;
            }
            out << '\n';
            return 0;
        }

        if (*bench_cmd) {
            auto rt = load_runtime(cfg, true, true);
            const auto questions = staged("dataset", [&] { return load_questions(dataset); });
            if (bench_kind == "retrieval") {
                const auto vol = effective_volume(cfg, kDefaultVolume);
                const KgRagPipeline pipeline(rt->store, *rt->diseases, *rt->context_provider,
                                             *rt->chat, pipeline_options(cfg, vol));
                BaselineOptions bopts{cfg.chat.config, cfg.evidence};
                const SchemaQueryBaseline baseline(rt->store, *rt->chat, bopts);
                const auto mode = perturb && *perturb != "none" ? Perturbation::lowercase_entities
                                                                : Perturbation::none;
                auto report = staged("bench", [&] {
                    return run_retrieval_comparison(questions, pipeline, baseline, rt->store, mode);
                });
                report.config_snapshot = run_snapshot(cfg, vol);
                out << "retrieval accuracy: kg-rag " << report.accuracy_kgrag << ", baseline "
                    << report.accuracy_baseline << "\naverage tokens: kg-rag "
                    << report.avg_tokens_kgrag << ", baseline " << report.avg_tokens_baseline
                    << "\ntoken reduction: " << report.reduction_pct << "%\n";
                write_reports(out_dir, report, out);
                return 0;
            }
            const bool tf = bench_kind == "tf";
            const auto vol = effective_volume(cfg, tf ? kTrueFalseVolume : kDefaultVolume);
            const KgRagPipeline pipeline(
                rt->store, *rt->diseases, *rt->context_provider, *rt->chat,
                pipeline_options(cfg, vol, tf ? kTrueFalseSystemPrompt : kMcqSystemPrompt));
            std::vector<BenchmarkQuestion> selected;
            for (const auto& q : questions)
                if (q.kind == (tf ? QuestionKind::tf : QuestionKind::mcq)) selected.push_back(q);
            auto report = staged("bench", [&] {
                return run_choice_benchmark(
                    selected, [&](std::string_view p) { return pipeline.answer(p); }, cfg.seed,
                    samples, sample_size);
            });
            report.config_snapshot = run_snapshot(cfg, vol);
            out << bench_kind << " accuracy: " << report.accuracy
                << "\nbootstrap: " << report.bootstrap.formatted() << '\n';
            write_reports(out_dir, report, out);
            return 0;
        }

        if (*sweep_cmd) {
            if (single_set.empty() && two_set.empty())
                throw ConfigError("sweep needs --single and/or --two prompt files");
            auto rt = load_runtime(cfg, true, true);
            std::vector<SweepPromptSet> sets;
            staged("dataset", [&] {
                if (!single_set.empty()) sets.push_back({"single-disease", load_questions(single_set)});
                if (!two_set.empty()) sets.push_back({"two-disease", load_questions(two_set)});
            });
            std::vector<std::unique_ptr<EmbeddingProvider>> owned;
            std::vector<const EmbeddingProvider*> providers;
            auto specs = cfg.sweep_embeddings;
            if (specs.empty()) specs = {cfg.context_embedding, cfg.entity_embedding};
            std::set<std::string> names;
            for (const auto& spec : specs) {
                auto p = make_embedding_provider(spec);
                if (!names.insert(p->name()).second) continue;
                providers.push_back(p.get());
                owned.push_back(std::move(p));
            }
            const auto& vols = volumes.empty() ? cfg.sweep_volumes : volumes;
            auto report = staged("sweep", [&] {
                return hyperparameter_sweep(
                    sets, providers, vols, [&](const EmbeddingProvider& provider, std::size_t v) {
                        return KgRagPipeline(rt->store, *rt->diseases, provider, *rt->chat,
                                             pipeline_options(cfg, v, kJsonAnswerSystemPrompt));
                    });
            });
            for (const auto& r : report.results)
                out << r.prompt_set << '\t' << r.provider_name << '\t' << r.context_volume << '\t'
                    << r.mean_jaccard << '\n';
            fs::create_directories(sweep_out);
            auto doc = report.to_json();
            doc["config_snapshot"] = cfg.snapshot();
            write_file(fs::path(sweep_out) / "report.json", doc.dump(2) + "\n");
            std::ofstream csv(fs::path(sweep_out) / "report.csv", std::ios::binary);
            report.write_csv(csv);
            out << "wrote " << (fs::path(sweep_out) / "report.json").string() << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error [config]: " << e.what() << '\n';
        return 1;
    } catch (const StageError& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace kgrag::cli
