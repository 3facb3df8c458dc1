#include "gca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::vector<std::string> tokenize(std::string_view text) {
    return split_whitespace(to_lower(text));
}

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    return counts;
}

}  // namespace

double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            int max_n) {
    if (candidate.empty()) return 0.0;
    const int n_max = std::min<int>(max_n, static_cast<int>(candidate.size()));
    double product = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const auto ref = ngram_counts(reference, n);
        long matched = 0;
        long total = 0;
        for (const auto& [gram, count] : cand) {
            auto it = ref.find(gram);
            matched += std::min<long>(count, it == ref.end() ? 0 : it->second);
            total += count;
        }
        double p;
        if (matched == 0)
            p = 1.0 / static_cast<double>(total + 1);  // add-one smoothing
        else
            p = static_cast<double>(matched) / static_cast<double>(total);
        product *= p;
    }
    double score = std::pow(product, 1.0 / static_cast<double>(n_max));
    if (candidate.size() < reference.size())
        score *= std::exp(1.0 - static_cast<double>(reference.size()) /
                                    static_cast<double>(candidate.size()));
    return score;
}

namespace {

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const size_t l = lcs_length(candidate, reference);
    if (l == 0) return 0.0;
    const double p = static_cast<double>(l) / static_cast<double>(candidate.size());
    const double r = static_cast<double>(l) / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

double win_rate(const std::vector<double>& scores_a, const std::vector<double>& scores_b) {
    if (scores_a.size() != scores_b.size())
        throw LengthMismatch("win_rate: " + std::to_string(scores_a.size()) + " vs " +
                             std::to_string(scores_b.size()) + " samples");
    if (scores_a.empty()) throw LengthMismatch("win_rate: no samples");
    double wins = 0.0;
    for (size_t i = 0; i < scores_a.size(); ++i) {
        if (scores_a[i] > scores_b[i])
            wins += 1.0;
        else if (scores_a[i] == scores_b[i])
            wins += 0.5;
    }
    return 100.0 * wins / static_cast<double>(scores_a.size());
}

double alignment(const std::vector<AlignmentPair>& pairs, double human_tie, double judge_tie) {
    long comparable = 0;
    long agreed = 0;
    for (const auto& p : pairs) {
        const double dh = p.human_a - p.human_b;
        const double dj = p.judge_a - p.judge_b;
        if (std::abs(dh) <= human_tie || std::abs(dj) <= judge_tie) continue;
        ++comparable;
        if ((dh > 0) == (dj > 0)) ++agreed;
    }
    if (comparable == 0) throw NoComparable("alignment: every pair fell within tie thresholds");
    return 100.0 * static_cast<double>(agreed) / static_cast<double>(comparable);
}

LineFit fit_length_bias(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw DegenerateX("fit_length_bias: need at least 2 points");
    double mean_x = 0, mean_y = 0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(points.size());
    mean_y /= static_cast<double>(points.size());
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if (sxx == 0.0) throw DegenerateX("fit_length_bias: all rounds values are equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    return fit;
}

// --- run aggregation --------------------------------------------------------

const std::vector<std::string> kSummaryColumns = {
    "Storyline Consistency", "Anthropomorphism", "Character Fidelity",
    "Storyline Quality",     "Average Score",    "BLEU",
    "ROUGE-L"};

namespace {

std::vector<double> row_values(const SampleRow& r) {
    return {r.storyline_consistency, r.anthropomorphism, r.character_fidelity,
            r.storyline_quality,     r.average,          r.bleu_score,
            r.rouge_l_score};
}

}  // namespace

std::vector<ModelSummary> aggregate_run(const std::vector<SampleRow>& rows) {
    // model -> run -> per-column accumulation over samples
    std::map<std::string, std::map<std::string, std::pair<std::vector<double>, int>>> acc;
    std::map<std::string, int> sample_counts;
    for (const auto& row : rows) {
        auto& [sums, count] = acc[row.model][row.run_id];
        const auto values = row_values(row);
        if (sums.empty()) sums.assign(values.size(), 0.0);
        for (size_t i = 0; i < values.size(); ++i) sums[i] += values[i];
        ++count;
        ++sample_counts[row.model];
    }

    std::vector<ModelSummary> out;
    for (const auto& [model, runs] : acc) {
        // per-run means
        std::vector<std::vector<double>> run_means;
        for (const auto& [run_id, entry] : runs) {
            const auto& [sums, count] = entry;
            std::vector<double> means(sums.size());
            for (size_t i = 0; i < sums.size(); ++i) means[i] = sums[i] / count;
            run_means.push_back(std::move(means));
        }
        ModelSummary summary;
        summary.model = model;
        summary.runs = static_cast<int>(run_means.size());
        summary.samples = sample_counts[model];
        const size_t ncols = kSummaryColumns.size();
        for (size_t col = 0; col < ncols; ++col) {
            ColumnStat stat;
            double mean = 0;
            for (const auto& rm : run_means) mean += rm[col];
            mean /= static_cast<double>(run_means.size());
            stat.mean = mean;
            if (run_means.size() > 1) {
                double var = 0;
                for (const auto& rm : run_means) var += (rm[col] - mean) * (rm[col] - mean);
                var /= static_cast<double>(run_means.size());
                stat.stddev = std::sqrt(var);
            }
            summary.columns.push_back(stat);
        }
        out.push_back(std::move(summary));
    }
    return out;
}

namespace {

std::string format_stat(const ColumnStat& stat) {
    char buf[64];
    if (stat.stddev)
        std::snprintf(buf, sizeof(buf), "%.2f±%.2f", stat.mean, *stat.stddev);
    else
        std::snprintf(buf, sizeof(buf), "%.2f", stat.mean);
    return buf;
}

}  // namespace

std::string render_markdown_table(const std::vector<ModelSummary>& summaries) {
    std::string out = "| Model |";
    for (const auto& col : kSummaryColumns) out += " " + col + " |";
    out += "\n|---|";
    for (size_t i = 0; i < kSummaryColumns.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& s : summaries) {
        out += "| " + s.model + " |";
        for (const auto& c : s.columns) out += " " + format_stat(c) + " |";
        out += "\n";
    }
    return out;
}

std::string render_csv_table(const std::vector<ModelSummary>& summaries) {
    std::string out = "model";
    for (const auto& col : kSummaryColumns) {
        std::string h = to_lower(col);
        std::replace(h.begin(), h.end(), ' ', '_');
        std::replace(h.begin(), h.end(), '-', '_');
        out += "," + h + "," + h + "_std";
    }
    out += "\n";
    for (const auto& s : summaries) {
        out += s.model;
        for (const auto& c : s.columns) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%.6f,", c.mean);
            out += buf;
            if (c.stddev) {
                std::snprintf(buf, sizeof(buf), "%.6f", *c.stddev);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace gca
