// gca: command-line front end for the book->corpus->simulation->judging
// pipeline. Subcommands: curate, sample-test, simulate, judge, report,
// export-train, retrieve.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "gca/corpus.hpp"
#include "gca/curator.hpp"
#include "gca/embedder.hpp"
#include "gca/errors.hpp"
#include "gca/exporter.hpp"
#include "gca/prompts.hpp"
#include "gca/retrieval.hpp"
#include "gca/rng.hpp"
#include "gca/run.hpp"

using namespace gca;

namespace {

struct GlobalFlags {
    std::string backend_config;
    std::string backend_mode;
    std::string fixture_dir = "fixtures/replay";
    std::uint64_t seed = 0;
    int workers = 1;
};

std::optional<BackendMode> mode_override(const GlobalFlags& flags) {
    if (flags.backend_mode.empty()) return std::nullopt;
    return backend_mode_from_string(flags.backend_mode);
}

int cmd_curate(const GlobalFlags& flags, const std::string& book_path,
               const std::string& meta_path, const std::string& out_path,
               const std::string& profiles_path) {
    std::ifstream book_in(book_path);
    if (!book_in) throw Error("cannot open book text: " + book_path);
    std::string text((std::istreambuf_iterator<char>(book_in)),
                     std::istreambuf_iterator<char>());

    BookMeta meta;
    {
        std::ifstream meta_in(meta_path);
        if (!meta_in) throw Error("cannot open metadata sidecar: " + meta_path);
        json doc = json::parse(meta_in);
        meta.title = doc.value("title", "");
        meta.author = doc.value("author", "");
        meta.in_domain = doc.value("in_domain", true);
        meta.language = doc.value("language", "English");
    }

    auto backends =
        run::load_backend_set(flags.backend_config, mode_override(flags), flags.fixture_dir);
    CurationBackends curation;
    curation.extractor = backends.actor.get();  // extraction rides the actor slot
    curation.repairer = backends.repair.get();
    curation.namer = backends.actor.get();
    curation.profiler = backends.actor.get();
    curation.refiner = backends.actor.get();

    std::vector<std::string> warnings;
    BookRecord book = curate_book(text, meta, curation, {}, &warnings);
    for (const auto& w : warnings) std::cerr << "[curate] " << w << "\n";

    save_book(book, out_path);
    if (!profiles_path.empty()) {
        ordered_json profiles = ordered_json::object();
        for (const auto& [name, rec] : book.characters)
            if (rec.profile) profiles[name] = *rec.profile;
        std::ofstream out(profiles_path);
        out << profiles.dump(2) << "\n";
    }
    run::write_manifest(out_path, "curate",
                        ordered_json{{"book", book_path},
                                     {"meta", meta_path},
                                     {"warnings", warnings.size()}});
    const auto violations = validate_book(book);
    for (const auto& v : violations)
        std::cerr << "[validate] " << to_string(v.code) << " at " << v.where << ": " << v.detail
                  << "\n";
    return is_valid(violations) ? 0 : 1;
}

int cmd_sample_test(const std::vector<std::string>& in_paths,
                    const std::vector<std::string>& out_paths, int n_in, int n_out,
                    std::uint64_t seed, const std::string& out_file) {
    std::vector<BookRecord> in_books, out_books;
    for (const auto& p : in_paths) in_books.push_back(load_book(p));
    for (const auto& p : out_paths) out_books.push_back(load_book(p));
    const auto refs = sample_test_set(in_books, out_books, n_in, n_out, seed);

    ordered_json arr = ordered_json::array();
    for (const auto& r : refs)
        arr.push_back(ordered_json{
            {"sample_id", run::sample_id_for(r.book_title, r.plot_index, r.conversation_index)},
            {"book_title", r.book_title},
            {"plot_index", r.plot_index},
            {"conversation_index", r.conversation_index},
            {"weight", r.weight},
            {"in_domain", r.in_domain}});
    std::ofstream out(out_file);
    if (!out) throw Error("cannot write sample list: " + out_file);
    out << arr.dump(2) << "\n";
    run::write_manifest(out_file, "sample-test",
                        ordered_json{{"n_in", n_in}, {"n_out", n_out}, {"seed", seed}});
    return 0;
}

int cmd_retrieve(const std::string& corpus_path, const std::string& character,
                 const std::string& query, const std::string& preset,
                 const std::string& index_out, const std::string& out_file) {
    const BookRecord book = load_book(corpus_path);
    HashingEmbedder embedder;
    const KnowledgeIndex index = build_index(book, embedder, /*train_plots_only=*/true);
    if (!index_out.empty())
        save_index(index, index_out, index_out + ".manifest.json");
    if (character.empty()) return 0;

    const RetrievalConfig cfg = RetrievalConfig::preset(preset);
    std::vector<std::string> warnings;
    const auto snippets = retrieve(index, embedder, character, query, cfg, 2000, &warnings);
    for (const auto& w : warnings) std::cerr << "[retrieve] " << w << "\n";

    ordered_json arr = ordered_json::array();
    for (const auto& s : snippets)
        arr.push_back(ordered_json{{"kind", std::string(to_string(s.kind))},
                                   {"plot_index", s.plot_index},
                                   {"similarity", s.similarity},
                                   {"text", s.text}});
    if (out_file.empty()) {
        std::cout << arr.dump(2) << "\n";
    } else {
        std::ofstream out(out_file);
        out << arr.dump(2) << "\n";
        run::write_manifest(out_file, "retrieve",
                            ordered_json{{"corpus", corpus_path},
                                         {"character", character},
                                         {"preset", preset},
                                         {"embedder", embedder.id()}});
    }
    return 0;
}

int cmd_export_train(const std::string& corpus_path, std::uint64_t seed, double toggle_prob,
                     const std::string& out_file) {
    const BookRecord book = load_book(corpus_path);
    const std::size_t count = export_training_file(book, seed, toggle_prob, out_file);
    run::write_manifest(out_file, "export-train",
                        ordered_json{{"corpus", corpus_path},
                                     {"seed", seed},
                                     {"toggle_prob", toggle_prob},
                                     {"samples", count}});
    std::cout << count << " training samples written to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"given-circumstance acting: corpus curation, multi-agent simulation, "
                 "penalty-based judging and reporting"};
    app.require_subcommand(1);
    app.set_config("--config", "", "config file (INI/TOML; flags take precedence)");

    GlobalFlags flags;
    app.add_option("--backend", flags.backend_config, "backend config JSON")
        ->configurable(true);
    app.add_option("--backend-mode", flags.backend_mode,
                   "override every role's mode: live|record|replay|scripted")
        ->configurable(true);
    app.add_option("--fixture-dir", flags.fixture_dir,
                   "default fixture directory for replay/record")
        ->configurable(true);
    app.add_option("--seed", flags.seed, "root seed; per-stage seeds derive from it")
        ->configurable(true);
    app.add_option("--workers", flags.workers, "worker budget for per-sample parallelism")
        ->configurable(true);

    // curate
    auto* curate = app.add_subcommand("curate", "plain-text book -> corpus JSON");
    std::string book_path, meta_path, curate_out, profiles_out;
    curate->add_option("--book", book_path, "UTF-8 plain text book")->required();
    curate->add_option("--meta", meta_path, "metadata sidecar JSON")->required();
    curate->add_option("--out", curate_out, "corpus JSON output")->required();
    curate->add_option("--profiles", profiles_out, "character-profile JSON map output");

    // sample-test
    auto* sample_test = app.add_subcommand("sample-test", "weighted test-set sampling");
    std::vector<std::string> st_in, st_out_domain;
    int st_n_in = 0, st_n_out = 0;
    std::string st_out;
    sample_test->add_option("--corpus", st_in, "in-domain corpus JSON files")->required();
    sample_test->add_option("--out-of-domain", st_out_domain, "out-of-domain corpus files");
    sample_test->add_option("--n-in", st_n_in, "in-domain sample count")->required();
    sample_test->add_option("--n-out", st_n_out, "out-of-domain sample count");
    sample_test->add_option("--out", st_out, "output JSON")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "multi-agent conversation simulation");
    run::SimulateOptions sim_opts;
    simulate->add_option("--corpus", sim_opts.corpus_paths, "corpus JSON files")->required();
    simulate->add_option("--split", sim_opts.split, "test|train|all");
    simulate->add_option("--k", sim_opts.cfg.k, "continue-from prefix length");
    simulate->add_option("--max-turns", sim_opts.cfg.max_turns, "simulated message cap");
    simulate->add_flag("!--no-other-profiles", sim_opts.cfg.include_other_profiles,
                       "exclude other characters' profiles");
    simulate->add_flag("--plot-summary", sim_opts.cfg.include_plot_summary,
                       "give actors the plot summary");
    simulate->add_flag("!--no-motivations", sim_opts.cfg.include_motivations,
                       "exclude character motivations");
    simulate->add_flag("!--no-thoughts", sim_opts.cfg.emit_inner_thoughts,
                       "instruct actors to omit inner thoughts");
    simulate->add_flag("!--no-call-log", sim_opts.keep_call_log,
                       "drop per-sample backend call logs");
    simulate->add_option("--out", sim_opts.out_path, "transcripts JSONL")->required();

    // judge
    auto* judge = app.add_subcommand("judge", "penalty-based judging of transcripts");
    run::JudgeOptions judge_opts;
    judge->add_option("--transcripts", judge_opts.transcripts_path, "transcripts JSONL")
        ->required();
    judge->add_option("--corpus", judge_opts.corpus_paths, "corpus JSON files")->required();
    judge->add_option("--judge-backend", flags.backend_config, "backend config JSON");
    judge->add_option("--lambda", judge_opts.cfg.lambda, "length-correction weight");
    judge->add_option("--mult", judge_opts.cfg.mult, "severity multiplier");
    judge->add_flag("--thoughts-visible", judge_opts.cfg.thoughts_visible,
                    "show inner thoughts to the critic");
    judge->add_option("--out", judge_opts.out_path, "report JSON")->required();

    // report
    auto* report = app.add_subcommand("report", "aggregate reports into a results table");
    run::ReportOptions report_opts;
    report->add_option("--reports", report_opts.report_globs, "report JSON files (glob)")
        ->required();
    report->add_option("--transcripts", report_opts.transcript_globs,
                       "transcripts JSONL files (glob)")
        ->required();
    report->add_option("--corpus", report_opts.corpus_paths, "corpus JSON files")->required();
    report->add_flag("!--no-thought-text", report_opts.thoughts_in_metric_text,
                     "exclude thought text from BLEU/ROUGE");
    report->add_option("--out", report_opts.out_path, "table output (.md or .csv)")->required();

    // export-train
    auto* export_train = app.add_subcommand("export-train", "build training samples");
    std::string et_corpus, et_out, et_split = "train";
    double et_toggle = 0.5;
    export_train->add_option("--corpus", et_corpus, "corpus JSON")->required();
    export_train->add_option("--split", et_split, "only 'train' is exportable");
    export_train->add_option("--toggle-prob", et_toggle, "optional-section keep probability");
    export_train->add_option("--out", et_out, "training JSONL")->required();

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "build/query the knowledge index");
    std::string rt_corpus, rt_character, rt_query, rt_preset = "Expr3+Conv", rt_index, rt_out;
    retrieve_cmd->add_option("--corpus", rt_corpus, "corpus JSON")->required();
    retrieve_cmd->add_option("--character", rt_character, "character to query for");
    retrieve_cmd->add_option("--query", rt_query, "query text");
    retrieve_cmd->add_option("--preset", rt_preset, "Base|RawText|Conv|Expr3|Expr3+Conv|Expr10+Conv");
    retrieve_cmd->add_option("--save-index", rt_index, "persist the index JSONL here");
    retrieve_cmd->add_option("--out", rt_out, "snippet output JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, help exits 0
    }

    try {
        if (curate->parsed())
            return cmd_curate(flags, book_path, meta_path, curate_out, profiles_out);
        if (sample_test->parsed())
            return cmd_sample_test(st_in, st_out_domain, st_n_in, st_n_out, flags.seed, st_out);
        if (simulate->parsed()) {
            sim_opts.root_seed = flags.seed;
            sim_opts.workers = flags.workers;
            auto backends = run::load_backend_set(flags.backend_config, mode_override(flags),
                                                  flags.fixture_dir);
            return run::run_simulate(sim_opts, backends);
        }
        if (judge->parsed()) {
            judge_opts.workers = flags.workers;
            auto backends = run::load_backend_set(flags.backend_config, mode_override(flags),
                                                  flags.fixture_dir);
            return run::run_judge(judge_opts, backends);
        }
        if (report->parsed()) return run::run_report(report_opts);
        if (export_train->parsed()) {
            if (et_split != "train")
                throw HeldOutLeak("export-train only exports the train split");
            return cmd_export_train(et_corpus, flags.seed, et_toggle, et_out);
        }
        if (retrieve_cmd->parsed())
            return cmd_retrieve(rt_corpus, rt_character, rt_query, rt_preset, rt_index, rt_out);
    } catch (const FixtureMiss& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!e.key.empty()) std::cerr << "request hash: " << e.key << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
