#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gca {

// Metric tokenization: lowercase, whitespace-split.
std::vector<std::string> tokenize(std::string_view text);

// BLEU with modified n-gram precision up to min(max_n, |candidate|), add-one
// smoothing on zero-count precisions and the short-candidate brevity penalty
// exp(1 - |ref|/|cand|). Empty candidate scores 0.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            int max_n = 4);

// ROUGE-L F1 from LCS length; 0 when LCS is empty.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// Percentage of paired samples where a beats b; ties count half. Throws
// LengthMismatch on unequal lengths.
double win_rate(const std::vector<double>& scores_a, const std::vector<double>& scores_b);

// One model-pair comparison scored by both a human judge and an automatic
// judge.
struct AlignmentPair {
    double human_a = 0, human_b = 0;
    double judge_a = 0, judge_b = 0;
};

// Agreement frequency between the two judges across comparisons, excluding
// pairs where either judge scores the models within its tie threshold.
// Throws NoComparable when every pair is excluded. Returns a percentage.
double alignment(const std::vector<AlignmentPair>& pairs, double human_tie = 1.0,
                 double judge_tie = 5.0);

struct LineFit {
    double slope = 0;
    double intercept = 0;
};

// Ordinary least squares over (rounds, score) points. Throws DegenerateX when
// all x values coincide.
LineFit fit_length_bias(const std::vector<std::pair<double, double>>& points);

// --- run aggregation -------------------------------------------------------

// One judged-and-measured sample, as produced by the judge + metric passes.
struct SampleRow {
    std::string model;
    std::string run_id;  // distinguishes repeated runs (e.g. seeds)
    std::string sample_id;
    double storyline_consistency = 0;
    double anthropomorphism = 0;
    double character_fidelity = 0;
    double storyline_quality = 0;
    double average = 0;
    double bleu_score = 0;
    double rouge_l_score = 0;
};

struct ColumnStat {
    double mean = 0;
    std::optional<double> stddev;  // absent for single runs
};

struct ModelSummary {
    std::string model;
    int runs = 0;
    int samples = 0;
    // column order: storyline consistency, anthropomorphism, character
    // fidelity, storyline quality, average, BLEU, ROUGE-L
    std::vector<ColumnStat> columns;
};

extern const std::vector<std::string> kSummaryColumns;

// Groups rows by model and run, averages per run over samples, then reports
// per-model mean (and across-run stddev when several runs exist).
std::vector<ModelSummary> aggregate_run(const std::vector<SampleRow>& rows);

std::string render_markdown_table(const std::vector<ModelSummary>& summaries);
std::string render_csv_table(const std::vector<ModelSummary>& summaries);

}  // namespace gca
