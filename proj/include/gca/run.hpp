#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/curator.hpp"
#include "gca/gateway.hpp"
#include "gca/judge.hpp"
#include "gca/metrics.hpp"
#include "gca/simulator.hpp"

// Pipeline orchestration shared by the CLI and the acceptance suite.
namespace gca::run {

// Backends for every pipeline role, built from one JSON config file with
// per-role sections ("actor", "environment", "nsp", "judge", "repair").
struct BackendSet {
    std::shared_ptr<ChatBackend> actor;
    std::shared_ptr<ChatBackend> environment;
    std::shared_ptr<ChatBackend> nsp;
    std::shared_ptr<ChatBackend> judge;
    std::shared_ptr<ChatBackend> repair;
};

// mode_override (from --backend-mode) rewrites each role's mode; for replay
// and scripted roles without an explicit fixture, the path defaults to
// <fixture_dir>/<role>.jsonl.
BackendSet load_backend_set(const std::string& config_path,
                            std::optional<BackendMode> mode_override,
                            const std::string& fixture_dir);

// Every run writes "<out>.manifest.json" capturing the config snapshot,
// seeds, backend ids and asset version, enough to replay the run.
void write_manifest(const std::string& out_path, const std::string& command,
                    const ordered_json& config);

std::vector<std::string> expand_glob(const std::string& pattern);

std::string sample_id_for(const std::string& book_title, int plot_index, int conv_index);

struct SimulateOptions {
    std::vector<std::string> corpus_paths;
    std::string split = "test";  // test | train | all
    SimulationConfig cfg;
    std::uint64_t root_seed = 0;
    std::string out_path;
    int workers = 1;
    bool keep_call_log = true;  // call logs make transcripts auditable but large
};

int run_simulate(const SimulateOptions& options, const BackendSet& backends);

struct JudgeOptions {
    std::string transcripts_path;
    std::vector<std::string> corpus_paths;
    JudgeConfig cfg;
    std::string out_path;
    int workers = 1;
};

int run_judge(const JudgeOptions& options, const BackendSet& backends);

struct ReportOptions {
    std::vector<std::string> report_globs;
    std::vector<std::string> transcript_globs;
    std::vector<std::string> corpus_paths;
    std::string out_path;      // .md or .csv decides the format
    bool thoughts_in_metric_text = true;
};

int run_report(const ReportOptions& options);

// Builds metric rows (per-sample scores + BLEU/ROUGE) from reports,
// transcripts and originals; shared between run_report and tests.
std::vector<SampleRow> collect_rows(const std::vector<EvaluationReport>& reports,
                                    const std::vector<Transcript>& transcripts,
                                    const std::vector<BookRecord>& books,
                                    bool thoughts_in_metric_text = true);

// Metric text helpers: concatenated surface text of the compared region.
std::string simulated_metric_text(const Transcript& t, bool include_thoughts = true);
std::string original_metric_text(const Conversation& original, int k,
                                 bool include_thoughts = true);

const Conversation* find_conversation(const std::vector<BookRecord>& books,
                                      const std::string& sample_id);
const BookRecord* find_book(const std::vector<BookRecord>& books, const std::string& title);

}  // namespace gca::run
