#include "gca/run.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "gca/errors.hpp"
#include "gca/prompts.hpp"
#include "gca/rng.hpp"
#include "gca/strings.hpp"

namespace fs = std::filesystem;

namespace gca::run {

namespace {

ordered_json backend_cfg_json(const json& doc, const char* role) {
    if (doc.contains(role)) return doc.at(role);
    return ordered_json::object();
}

std::shared_ptr<ChatBackend> build_role(const json& doc, const char* role,
                                        std::optional<BackendMode> mode_override,
                                        const std::string& fixture_dir) {
    json cfg_json = backend_cfg_json(doc, role);
    BackendConfig cfg = BackendConfig::from_json(cfg_json);
    if (mode_override) cfg.mode = *mode_override;
    if ((cfg.mode == BackendMode::replay || cfg.mode == BackendMode::scripted) &&
        cfg.fixture_path.empty())
        cfg.fixture_path = (fs::path(fixture_dir) / (std::string(role) + ".jsonl")).string();
    if (cfg.mode == BackendMode::record && cfg.fixture_path.empty())
        cfg.fixture_path = (fs::path(fixture_dir) / (std::string(role) + ".jsonl")).string();
    return make_backend(cfg);
}

}  // namespace

BackendSet load_backend_set(const std::string& config_path,
                            std::optional<BackendMode> mode_override,
                            const std::string& fixture_dir) {
    json doc = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open backend config: " + config_path);
        doc = json::parse(in);
    }
    BackendSet set;
    set.actor = build_role(doc, "actor", mode_override, fixture_dir);
    set.environment = build_role(doc, "environment", mode_override, fixture_dir);
    set.nsp = build_role(doc, "nsp", mode_override, fixture_dir);
    set.judge = build_role(doc, "judge", mode_override, fixture_dir);
    set.repair = build_role(doc, "repair", mode_override, fixture_dir);
    return set;
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const ordered_json& config) {
    const std::string path = out_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    out << ordered_json{{"command", command},
                        {"asset_version", prompts::version()},
                        {"config", config}}
               .dump(2)
        << "\n";
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    const fs::path p(pattern);
    const std::string filename = p.filename().string();
    if (filename.find('*') == std::string::npos) {
        return {pattern};
    }
    const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    // '*' wildcard in the filename component only
    const std::size_t star = filename.find('*');
    const std::string prefix = filename.substr(0, star);
    const std::string suffix = filename.substr(star + 1);
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() < prefix.size() + suffix.size()) continue;
        if (name.compare(0, prefix.size(), prefix) != 0) continue;
        if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
        out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string sample_id_for(const std::string& book_title, int plot_index, int conv_index) {
    return book_title + "#p" + std::to_string(plot_index) + "#c" + std::to_string(conv_index);
}

const BookRecord* find_book(const std::vector<BookRecord>& books, const std::string& title) {
    for (const auto& b : books)
        if (b.title == title) return &b;
    return nullptr;
}

const Conversation* find_conversation(const std::vector<BookRecord>& books,
                                      const std::string& sample_id) {
    for (const auto& book : books) {
        for (std::size_t p = 0; p < book.plots.size(); ++p) {
            for (std::size_t c = 0; c < book.plots[p].conversations.size(); ++c) {
                if (sample_id_for(book.title, static_cast<int>(p), static_cast<int>(c)) ==
                    sample_id)
                    return &book.plots[p].conversations[c];
            }
        }
    }
    return nullptr;
}

namespace {

std::vector<BookRecord> load_books(const std::vector<std::string>& paths) {
    std::vector<BookRecord> books;
    for (const auto& path : paths) books.push_back(load_book(path));
    return books;
}

struct SampleTask {
    const BookRecord* book;
    int plot_index;
    int conv_index;
};

std::vector<SampleTask> select_samples(const std::vector<BookRecord>& books,
                                       const std::string& split) {
    std::vector<SampleTask> tasks;
    for (const auto& book : books) {
        const HoldoutSplit holdout = split_holdout(book);
        std::vector<int> plots;
        if (split == "test")
            plots = holdout.test;
        else if (split == "train")
            plots = holdout.train;
        else if (split == "all") {
            plots = holdout.train;
            plots.insert(plots.end(), holdout.test.begin(), holdout.test.end());
            std::sort(plots.begin(), plots.end());
        } else {
            throw ConfigError("unknown split: " + split);
        }
        for (int p : plots) {
            const auto& convs = book.plots[static_cast<std::size_t>(p)].conversations;
            for (std::size_t c = 0; c < convs.size(); ++c)
                tasks.push_back({&book, p, static_cast<int>(c)});
        }
    }
    return tasks;
}

// Bounded parallel map preserving task order in the output.
template <typename Task, typename Fn>
void parallel_for(const std::vector<Task>& tasks, int workers, const Fn& fn) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(tasks.size()));
    for (int w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

int run_simulate(const SimulateOptions& options, const BackendSet& backends) {
    const auto books = load_books(options.corpus_paths);
    const auto tasks = select_samples(books, options.split);

    std::vector<Transcript> transcripts(tasks.size());
    std::vector<std::string> errors(tasks.size());
    SimulationBackends sim{backends.actor.get(), backends.environment.get(),
                           backends.nsp.get()};

    parallel_for(tasks, options.workers, [&](std::size_t i) {
        const SampleTask& task = tasks[i];
        const Conversation& conv =
            task.book->plots[static_cast<std::size_t>(task.plot_index)]
                .conversations[static_cast<std::size_t>(task.conv_index)];
        SimulationConfig cfg = options.cfg;
        const std::string sid = sample_id_for(task.book->title, task.plot_index, task.conv_index);
        cfg.rng_seed = derive_seed(options.root_seed, sid);
        cfg.k = std::min<int>(options.cfg.k, static_cast<int>(conv.dialogues.size()));
        SceneContext context = make_scene_context(*task.book, task.plot_index, conv);
        try {
            transcripts[i] = simulate(conv, context, cfg, sim);
        } catch (const SimulationAborted& e) {
            transcripts[i] = e.partial;  // keep the partial transcript for the audit trail
            errors[i] = e.what();
        }
        transcripts[i].sample_id = sid;
        transcripts[i].plot_index = task.plot_index;
        transcripts[i].conversation_index = task.conv_index;
        transcripts[i].book_title = task.book->title;
        if (!options.keep_call_log) transcripts[i].call_log.clear();
    });

    save_transcripts(transcripts, options.out_path);
    write_manifest(options.out_path, "simulate",
                   ordered_json{{"corpus", options.corpus_paths},
                                {"split", options.split},
                                {"k", options.cfg.k},
                                {"max_turns", options.cfg.max_turns},
                                {"seed", options.root_seed},
                                {"workers", options.workers},
                                {"backends",
                                 {{"actor", backends.actor->id()},
                                  {"environment", backends.environment->id()},
                                  {"nsp", backends.nsp->id()}}}});

    int failures = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i].empty()) continue;
        ++failures;
        std::cerr << "[simulate] " << transcripts[i].sample_id << ": " << errors[i] << "\n";
    }
    return failures == 0 ? 0 : 1;
}

int run_judge(const JudgeOptions& options, const BackendSet& backends) {
    const auto books = load_books(options.corpus_paths);
    const auto transcripts = load_transcripts(options.transcripts_path);

    std::vector<EvaluationReport> reports(transcripts.size());
    std::vector<std::string> errors(transcripts.size());

    parallel_for(transcripts, options.workers, [&](std::size_t i) {
        const Transcript& t = transcripts[i];
        const Conversation* original = find_conversation(books, t.sample_id);
        if (!original) {
            errors[i] = "no original conversation for sample " + t.sample_id;
            return;
        }
        const BookRecord* book = find_book(books, t.book_title);
        SceneContext context = make_scene_context(*book, t.plot_index, *original);
        reports[i] = evaluate(t, *original, context, *backends.judge, *backends.repair,
                              options.cfg);
    });

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) throw MissingSample(errors[i]);
    }

    save_reports(reports, options.out_path);
    write_manifest(options.out_path, "judge",
                   ordered_json{{"transcripts", options.transcripts_path},
                                {"corpus", options.corpus_paths},
                                {"lambda", options.cfg.lambda},
                                {"mult", options.cfg.mult},
                                {"thoughts_visible", options.cfg.thoughts_visible},
                                {"backends",
                                 {{"judge", backends.judge->id()},
                                  {"repair", backends.repair->id()}}}});
    return 0;
}

std::string simulated_metric_text(const Transcript& t, bool include_thoughts) {
    std::string text;
    for (const auto& m : t.simulated) {
        if (!text.empty()) text += " ";
        text += include_thoughts ? m.surface()
                                 : render_message(m, kJudgeWithoutThoughts);
    }
    return text;
}

std::string original_metric_text(const Conversation& original, int k, bool include_thoughts) {
    std::string text;
    for (std::size_t i = static_cast<std::size_t>(std::max(0, k));
         i < original.dialogues.size(); ++i) {
        const auto& m = original.dialogues[i];
        if (!text.empty()) text += " ";
        text += include_thoughts ? m.surface()
                                 : render_message(m, kJudgeWithoutThoughts);
    }
    return text;
}

std::vector<SampleRow> collect_rows(const std::vector<EvaluationReport>& reports,
                                    const std::vector<Transcript>& transcripts,
                                    const std::vector<BookRecord>& books,
                                    bool thoughts_in_metric_text) {
    std::map<std::string, const Transcript*> by_id;
    for (const auto& t : transcripts) by_id[t.sample_id] = &t;

    std::vector<SampleRow> rows;
    for (const auto& report : reports) {
        auto it = by_id.find(report.sample_id);
        if (it == by_id.end())
            throw MissingSample("no transcript for report sample " + report.sample_id);
        const Transcript& t = *it->second;
        const Conversation* original = find_conversation(books, report.sample_id);
        if (!original)
            throw MissingSample("no original conversation for sample " + report.sample_id);

        SampleRow row;
        row.model = report.actor_model;
        row.run_id = "seed" + std::to_string(t.rng_seed) + "-k" + std::to_string(t.k);
        row.sample_id = report.sample_id;
        auto dim = [&report](Dimension d) {
            auto found = report.per_dimension.find(d);
            return found == report.per_dimension.end() ? 0.0
                                                       : found->second.corrected_score;
        };
        row.storyline_consistency = dim(Dimension::storyline_consistency);
        row.anthropomorphism = dim(Dimension::anthropomorphism);
        row.character_fidelity = dim(Dimension::character_fidelity);
        row.storyline_quality = dim(Dimension::storyline_quality);
        row.average = report.average;

        const auto cand = tokenize(simulated_metric_text(t, thoughts_in_metric_text));
        const auto ref =
            tokenize(original_metric_text(*original, t.k, thoughts_in_metric_text));
        row.bleu_score = bleu(cand, ref);
        row.rouge_l_score = rouge_l(cand, ref);
        rows.push_back(std::move(row));
    }
    return rows;
}

int run_report(const ReportOptions& options) {
    std::vector<EvaluationReport> reports;
    for (const auto& pattern : options.report_globs) {
        for (const auto& path : expand_glob(pattern)) {
            auto batch = load_reports(path);
            reports.insert(reports.end(), batch.begin(), batch.end());
        }
    }
    std::vector<Transcript> transcripts;
    for (const auto& pattern : options.transcript_globs) {
        for (const auto& path : expand_glob(pattern)) {
            auto batch = load_transcripts(path);
            transcripts.insert(transcripts.end(), batch.begin(), batch.end());
        }
    }
    const auto books = load_books(options.corpus_paths);

    const auto rows = collect_rows(reports, transcripts, books,
                                   options.thoughts_in_metric_text);
    const auto summaries = aggregate_run(rows);

    const bool csv = options.out_path.size() > 4 &&
                     options.out_path.substr(options.out_path.size() - 4) == ".csv";
    std::ofstream out(options.out_path);
    if (!out) throw Error("cannot write table: " + options.out_path);
    out << (csv ? render_csv_table(summaries) : render_markdown_table(summaries));
    out.close();

    write_manifest(options.out_path, "report",
                   ordered_json{{"reports", options.report_globs},
                                {"transcripts", options.transcript_globs},
                                {"corpus", options.corpus_paths},
                                {"samples", rows.size()}});
    return 0;
}

}  // namespace gca::run
