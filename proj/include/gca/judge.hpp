#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/gateway.hpp"
#include "gca/simulator.hpp"

namespace gca {

enum class Dimension {
    storyline_consistency,
    anthropomorphism,
    character_fidelity,
    storyline_quality,
};

inline constexpr Dimension kAllDimensions[] = {
    Dimension::storyline_consistency,
    Dimension::anthropomorphism,
    Dimension::character_fidelity,
    Dimension::storyline_quality,
};

std::string_view to_string(Dimension d);           // snake_case id
std::string dimension_display_name(Dimension d);   // e.g. "Character Fidelity"
Dimension dimension_from_string(std::string_view s);

// One judge-identified rubric violation.
struct Flaw {
    std::string instance;  // critic comment
    std::string type;      // rubric type name
    int severity = 1;      // 1 (minor) .. 5 (severe)
};

struct DimensionScore {
    Dimension dimension = Dimension::storyline_consistency;
    std::vector<Flaw> flaws;
    double raw_penalty = 0;      // mult * sum of severities
    double corrected_score = 0;  // clamp(100 - raw_penalty + lambda*n_msgs, 0, 100)
    bool scored = true;          // false when the critic reply was unrecoverable
};

struct JudgeConfig {
    double lambda = 1.5;  // additive per-message length correction
    double mult = 5.0;    // severity multiplier (the mainline penalty weight)
    bool thoughts_visible = false;
    ChatParams params;  // temperature 0: determinism matters most when judging
};

struct EvaluationReport {
    std::string sample_id;
    std::string actor_model;
    std::string judge_model;
    int k = 0;
    int n_msgs = 0;  // simulated messages only; the seeded prefix never counts
    bool thoughts_visible = false;
    bool partial = false;  // at least one dimension unscored
    std::map<Dimension, DimensionScore> per_dimension;
    double average = 0;  // arithmetic mean over the scored dimensions
    std::vector<std::string> warnings;
};

ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const json& doc);
void save_reports(const std::vector<EvaluationReport>& reports, const std::string& path);
std::vector<EvaluationReport> load_reports(const std::string& path);

// Penalty score with length correction:
//   clamp(100 - mult * sum(severities) + lambda * n_msgs, 0, 100)
double score_dimension(const std::vector<Flaw>& flaws, int n_msgs, double lambda = 1.5,
                       double mult = 5.0);

// Severity parsing: integers clamp into [1,5] with a warning; the words
// minor/moderate/severe map to 1/3/5; anything else becomes 3 with a warning.
int parse_severity(const json& value, std::vector<std::string>* warnings);

// Builds the critic prompt for one dimension (exposed for tests and audits).
std::string build_critic_prompt(const Transcript& transcript, const Conversation& original,
                                const SceneContext& context, Dimension dimension,
                                const JudgeConfig& cfg);

// Runs one dimension's critic call and parses the flaw list.
std::vector<Flaw> judge_dimension(const Transcript& transcript, const Conversation& original,
                                  const SceneContext& context, Dimension dimension,
                                  ChatBackend& critic, ChatBackend& repairer,
                                  const JudgeConfig& cfg,
                                  std::vector<std::string>* warnings = nullptr);

// Four independent critic calls, one per dimension, then scoring and the
// average. A dimension whose critic reply stays unrecoverable is flagged
// unscored and the report marked partial.
EvaluationReport evaluate(const Transcript& transcript, const Conversation& original,
                          const SceneContext& context, ChatBackend& critic,
                          ChatBackend& repairer, const JudgeConfig& cfg = {});

}  // namespace gca
