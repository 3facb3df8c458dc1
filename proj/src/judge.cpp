#include "gca/judge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gca/errors.hpp"
#include "gca/json_repair.hpp"
#include "gca/prompts.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(Dimension d) {
    switch (d) {
        case Dimension::storyline_consistency: return "storyline_consistency";
        case Dimension::anthropomorphism: return "anthropomorphism";
        case Dimension::character_fidelity: return "character_fidelity";
        case Dimension::storyline_quality: return "storyline_quality";
    }
    return "storyline_consistency";
}

Dimension dimension_from_string(std::string_view s) {
    for (Dimension d : kAllDimensions)
        if (s == to_string(d)) return d;
    throw SchemaViolation("unknown dimension: " + std::string(s));
}

namespace {

std::string rubric_asset_name(Dimension d) {
    return "rubric_" + std::string(to_string(d));
}

}  // namespace

std::string dimension_display_name(Dimension d) {
    const json rubric = json::parse(prompts::asset(rubric_asset_name(d)));
    return rubric.at("name").get<std::string>();
}

double score_dimension(const std::vector<Flaw>& flaws, int n_msgs, double lambda, double mult) {
    double penalty = 0;
    for (const auto& f : flaws) penalty += f.severity;
    const double score = 100.0 - mult * penalty + lambda * static_cast<double>(n_msgs);
    return std::clamp(score, 0.0, 100.0);
}

int parse_severity(const json& value, std::vector<std::string>* warnings) {
    auto warn = [warnings](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    if (value.is_number()) {
        const int v = static_cast<int>(std::lround(value.get<double>()));
        if (v < 1) {
            warn("severity " + std::to_string(v) + " clamped to 1");
            return 1;
        }
        if (v > 5) {
            warn("severity " + std::to_string(v) + " clamped to 5");
            return 5;
        }
        return v;
    }
    if (value.is_string()) {
        const std::string s = to_lower(trim(value.get<std::string>()));
        if (s == "minor") return 1;
        if (s == "moderate") return 3;
        if (s == "severe") return 5;
        try {
            return parse_severity(json(std::stoi(s)), warnings);
        } catch (...) {
        }
        warn("unparseable severity '" + s + "' mapped to 3");
        return 3;
    }
    warn("severity of unexpected type mapped to 3");
    return 3;
}

namespace {

std::string dialogue_block(const std::vector<Message>& messages, std::string_view viewer) {
    std::string out;
    for (const auto& m : messages) {
        const std::string rendered = render_message(m, viewer);
        if (rendered.empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += m.character + ": " + rendered;
    }
    return out;
}

std::string profiles_block(const SceneContext& context) {
    std::string out;
    for (const auto& name : context.major_characters) {
        auto it = context.profiles.find(name);
        if (it == context.profiles.end()) continue;
        if (!out.empty()) out += "\n\n";
        out += "### " + name + "\n\n" + it->second;
    }
    if (out.empty()) out = "(no profiles available)";
    return out;
}

}  // namespace

std::string build_critic_prompt(const Transcript& transcript, const Conversation& original,
                                const SceneContext& context, Dimension dimension,
                                const JudgeConfig& cfg) {
    const json rubric = json::parse(prompts::asset(rubric_asset_name(dimension)));
    const std::string majors = join(context.major_characters, ", ");
    const std::string_view viewer =
        cfg.thoughts_visible ? kJudgeWithThoughts : kJudgeWithoutThoughts;

    std::string prefix_notice;
    if (transcript.k > 0)
        prefix_notice = prompts::fill(prompts::asset("critic_prefix_notice"),
                                      {{"k", std::to_string(transcript.k)}});

    // the critic sees the seeded prefix followed by the simulation
    std::vector<Message> shown = transcript.seeded_prefix;
    shown.insert(shown.end(), transcript.simulated.begin(), transcript.simulated.end());

    return prompts::fill(
        prompts::asset("critic"),
        {{"book", context.book_title},
         {"major_characters", majors},
         {"dimension_name", rubric.at("name").get<std::string>()},
         {"dimension_intro", rubric.at("intro").get<std::string>()},
         {"prefix_notice", prefix_notice},
         {"plot_summary", context.plot_summary.empty() ? "(not available)"
                                                       : context.plot_summary},
         {"scenario", original.scenario},
         {"character_profiles", profiles_block(context)},
         {"original_conversation", dialogue_block(original.dialogues, viewer)},
         {"dimension_rubrics",
          prompts::fill(rubric.at("rubrics").get<std::string>(),
                        {{"major_characters", majors}})},
         {"dialogue_content", dialogue_block(shown, viewer)}});
}

std::vector<Flaw> judge_dimension(const Transcript& transcript, const Conversation& original,
                                  const SceneContext& context, Dimension dimension,
                                  ChatBackend& critic, ChatBackend& repairer,
                                  const JudgeConfig& cfg, std::vector<std::string>* warnings) {
    ChatRequest req;
    req.system = build_critic_prompt(transcript, original, context, dimension, cfg);
    req.params = cfg.params;
    const ChatResponse res = critic.complete(req);

    const std::string display = dimension_display_name(dimension);
    auto schema = [&display](const json& doc) -> std::optional<std::string> {
        if (!doc.is_object()) return "expected an object";
        if (doc.contains(display) && doc.at(display).is_object() &&
            doc.at(display).contains("flaws"))
            return std::nullopt;
        if (doc.contains("flaws")) return std::nullopt;
        return "missing '" + display + "'.flaws";
    };
    RepairOptions ropts;
    ropts.params = cfg.params;
    const json doc = parse_json_with_repair(res.content, schema, repairer, ropts);
    const json& flaw_list =
        doc.contains(display) ? doc.at(display).at("flaws") : doc.at("flaws");

    std::vector<Flaw> flaws;
    for (const auto& f : flaw_list) {
        if (!f.is_object()) continue;
        Flaw flaw;
        flaw.instance = f.value("instance", "");
        flaw.type = f.value("type", "");
        flaw.severity = f.contains("severity") ? parse_severity(f.at("severity"), warnings) : 3;
        flaws.push_back(std::move(flaw));
    }
    return flaws;
}

EvaluationReport evaluate(const Transcript& transcript, const Conversation& original,
                          const SceneContext& context, ChatBackend& critic,
                          ChatBackend& repairer, const JudgeConfig& cfg) {
    EvaluationReport report;
    report.sample_id = transcript.sample_id;
    report.actor_model = transcript.actor_model;
    report.judge_model = critic.id();
    report.k = transcript.k;
    report.n_msgs = static_cast<int>(transcript.simulated.size());
    report.thoughts_visible = cfg.thoughts_visible;

    double sum = 0;
    int scored = 0;
    for (Dimension d : kAllDimensions) {
        DimensionScore ds;
        ds.dimension = d;
        try {
            ds.flaws = judge_dimension(transcript, original, context, d, critic, repairer, cfg,
                                       &report.warnings);
            double penalty = 0;
            for (const auto& f : ds.flaws) penalty += f.severity;
            ds.raw_penalty = cfg.mult * penalty;
            ds.corrected_score = score_dimension(ds.flaws, report.n_msgs, cfg.lambda, cfg.mult);
            const double unclamped =
                100.0 - ds.raw_penalty + cfg.lambda * report.n_msgs;
            if (unclamped != ds.corrected_score)
                report.warnings.push_back(std::string(to_string(d)) + ": score clamped from " +
                                          std::to_string(unclamped));
            sum += ds.corrected_score;
            ++scored;
        } catch (const RepairExhausted& e) {
            ds.scored = false;
            report.partial = true;
            report.warnings.push_back(std::string(to_string(d)) +
                                      " unscored: " + e.what());
        }
        report.per_dimension.emplace(d, std::move(ds));
    }
    report.average = scored > 0 ? sum / scored : 0.0;
    return report;
}

// --- serialization -----------------------------------------------------------

ordered_json report_to_json(const EvaluationReport& report) {
    ordered_json dims = ordered_json::object();
    for (const auto& [dim, ds] : report.per_dimension) {
        ordered_json flaws = ordered_json::array();
        for (const auto& f : ds.flaws)
            flaws.push_back({{"instance", f.instance},
                             {"type", f.type},
                             {"severity", f.severity}});
        dims[std::string(to_string(dim))] = ordered_json{
            {"scored", ds.scored},
            {"raw_penalty", ds.raw_penalty},
            {"corrected_score", ds.corrected_score},
            {"flaws", std::move(flaws)},
        };
    }
    return ordered_json{{"sample_id", report.sample_id},
                        {"actor_model", report.actor_model},
                        {"judge_model", report.judge_model},
                        {"k", report.k},
                        {"n_msgs", report.n_msgs},
                        {"thoughts_visible", report.thoughts_visible},
                        {"partial", report.partial},
                        {"average", report.average},
                        {"dimensions", std::move(dims)},
                        {"warnings", report.warnings}};
}

EvaluationReport report_from_json(const json& doc) {
    EvaluationReport report;
    report.sample_id = doc.value("sample_id", "");
    report.actor_model = doc.value("actor_model", "");
    report.judge_model = doc.value("judge_model", "");
    report.k = doc.value("k", 0);
    report.n_msgs = doc.value("n_msgs", 0);
    report.thoughts_visible = doc.value("thoughts_visible", false);
    report.partial = doc.value("partial", false);
    report.average = doc.value("average", 0.0);
    if (doc.contains("dimensions")) {
        for (const auto& [key, value] : doc.at("dimensions").items()) {
            DimensionScore ds;
            ds.dimension = dimension_from_string(key);
            ds.scored = value.value("scored", true);
            ds.raw_penalty = value.value("raw_penalty", 0.0);
            ds.corrected_score = value.value("corrected_score", 0.0);
            if (value.contains("flaws")) {
                for (const auto& f : value.at("flaws")) {
                    Flaw flaw;
                    flaw.instance = f.value("instance", "");
                    flaw.type = f.value("type", "");
                    flaw.severity = f.value("severity", 1);
                    ds.flaws.push_back(std::move(flaw));
                }
            }
            report.per_dimension.emplace(ds.dimension, std::move(ds));
        }
    }
    if (doc.contains("warnings"))
        report.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return report;
}

void save_reports(const std::vector<EvaluationReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write reports: " + path);
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    out << arr.dump(2) << "\n";
}

std::vector<EvaluationReport> load_reports(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open reports: " + path);
    const json doc = json::parse(in);
    std::vector<EvaluationReport> out;
    for (const auto& r : doc) out.push_back(report_from_json(r));
    return out;
}

}  // namespace gca
