#include "gca/simulator.hpp"

#include <algorithm>
#include <fstream>

#include "gca/errors.hpp"
#include "gca/prompts.hpp"
#include "gca/rng.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(EndReason r) {
    return r == EndReason::nsp_end ? "nsp_end" : "turn_cap";
}

namespace {

EndReason end_reason_from_string(std::string_view s) {
    return s == "turn_cap" ? EndReason::turn_cap : EndReason::nsp_end;
}

}  // namespace

// --- transcript serialization ----------------------------------------------

ordered_json transcript_to_json(const Transcript& t) {
    auto messages = [](const std::vector<Message>& list) {
        ordered_json arr = ordered_json::array();
        for (const auto& m : list)
            arr.push_back({{"character", m.character}, {"message", m.surface()}});
        return arr;
    };
    ordered_json decisions = ordered_json::array();
    for (const auto& d : t.decisions)
        decisions.push_back(
            {{"chosen_speaker", d.chosen_speaker}, {"raw_nsp_output", d.raw_nsp_output}});
    ordered_json calls = ordered_json::array();
    for (const auto& ex : t.call_log) calls.push_back(exchange_to_json(ex));
    return ordered_json{{"sample_id", t.sample_id},
                        {"book_title", t.book_title},
                        {"plot_index", t.plot_index},
                        {"conversation_index", t.conversation_index},
                        {"actor_model", t.actor_model},
                        {"k", t.k},
                        {"rng_seed", t.rng_seed},
                        {"end_reason", std::string(to_string(t.end_reason))},
                        {"seeded_prefix", messages(t.seeded_prefix)},
                        {"simulated", messages(t.simulated)},
                        {"decisions", std::move(decisions)},
                        {"warnings", t.warnings},
                        {"call_log", std::move(calls)}};
}

Transcript transcript_from_json(const json& doc) {
    Transcript t;
    t.sample_id = doc.value("sample_id", "");
    t.book_title = doc.value("book_title", "");
    t.plot_index = doc.value("plot_index", -1);
    t.conversation_index = doc.value("conversation_index", -1);
    t.actor_model = doc.value("actor_model", "");
    t.k = doc.value("k", 0);
    t.rng_seed = doc.value("rng_seed", std::uint64_t{0});
    t.end_reason = end_reason_from_string(doc.value("end_reason", "nsp_end"));
    auto parse_list = [](const json& arr, std::vector<Message>& out) {
        for (const auto& m : arr)
            out.push_back(make_message(m.value("character", ""), m.value("message", "")));
    };
    if (doc.contains("seeded_prefix")) parse_list(doc.at("seeded_prefix"), t.seeded_prefix);
    if (doc.contains("simulated")) parse_list(doc.at("simulated"), t.simulated);
    if (doc.contains("decisions")) {
        for (const auto& d : doc.at("decisions"))
            t.decisions.push_back(
                {d.value("chosen_speaker", ""), d.value("raw_nsp_output", "")});
    }
    if (doc.contains("warnings"))
        t.warnings = doc.at("warnings").get<std::vector<std::string>>();
    if (doc.contains("call_log")) {
        for (const auto& c : doc.at("call_log")) t.call_log.push_back(exchange_from_json(c));
    }
    return t;
}

void save_transcripts(const std::vector<Transcript>& transcripts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write transcripts: " + path);
    for (const auto& t : transcripts) out << transcript_to_json(t).dump() << "\n";
}

std::vector<Transcript> load_transcripts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open transcripts: " + path);
    std::vector<Transcript> out;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) continue;
        out.push_back(transcript_from_json(json::parse(line)));
    }
    return out;
}

// --- prompt building ---------------------------------------------------------

SceneContext make_scene_context(const BookRecord& book, int plot_index,
                                const Conversation& conversation) {
    SceneContext ctx;
    ctx.book_title = book.title;
    if (plot_index >= 0 && plot_index < static_cast<int>(book.plots.size()))
        ctx.plot_summary = book.plots[static_cast<std::size_t>(plot_index)].summary;
    for (const auto& name : conversation.participants()) {
        const CharacterRecord* rec = book.resolve(name);
        if (rec && rec->profile) {
            ctx.profiles[name] = *rec->profile;
            ctx.major_characters.push_back(name);
        }
    }
    return ctx;
}

namespace {

std::string other_profiles_block(const std::string& character, const Conversation& conversation,
                                 const SceneContext& context) {
    std::string block;
    for (const auto& name : conversation.participants()) {
        if (name == character) continue;
        auto it = context.profiles.find(name);
        if (it == context.profiles.end()) continue;
        if (!block.empty()) block += "\n\n";
        block += name + ": " + it->second;
    }
    return block;
}

}  // namespace

std::string build_actor_prompt(const std::string& character, const Conversation& conversation,
                               const SceneContext& context, const SimulationConfig& cfg) {
    const json sections = json::parse(prompts::asset("actor_inference"));
    const bool is_major = std::find(context.major_characters.begin(),
                                    context.major_characters.end(),
                                    character) != context.major_characters.end();
    auto profile_it = context.profiles.find(character);
    if (is_major && profile_it == context.profiles.end())
        throw MissingProfile("major character '" + character + "' has no profile");
    const std::string profile =
        profile_it == context.profiles.end() ? "(no profile available)" : profile_it->second;

    std::map<std::string, std::string> vars{
        {"character", character},
        {"book_name", context.book_title},
        {"character_profile", profile},
        {"scenario", conversation.scenario},
    };

    std::vector<std::string> parts;
    auto add = [&](const char* key) {
        parts.push_back(prompts::fill(sections.at(key).get<std::string>(), vars));
    };
    add("intro");
    add("profile");
    add("scenario");

    if (cfg.include_other_profiles) {
        const std::string block = other_profiles_block(character, conversation, context);
        if (!block.empty()) {
            vars["other_character_profiles"] = block;
            add("other_profiles");
        }
    }
    if (cfg.include_plot_summary && !context.plot_summary.empty()) {
        vars["plot_summary"] = context.plot_summary;
        add("plot_summary");
    }
    if (cfg.include_motivations) {
        const ConversationCharacter* kc = conversation.find_character(character);
        if (kc && !kc->motivation.empty()) {
            vars["motivation"] = kc->motivation;
            add("motivation");
        }
    }
    if (auto it = context.retrieved_background.find(character);
        it != context.retrieved_background.end() && !it->second.empty()) {
        vars["retrieved_knowledge"] = it->second;
        add("background");
    }
    add(cfg.emit_inner_thoughts ? "requirements" : "requirements_no_thoughts");

    return join(parts, "\n\n");
}

// --- NSP ---------------------------------------------------------------------

SpeakerDecision parse_speaker_decision(const std::string& raw,
                                       const std::vector<std::string>& characters,
                                       std::vector<std::string>* warnings) {
    SpeakerDecision decision;
    decision.raw_output = raw;
    std::string text = trim(raw);
    // strip wrapping quotes models like to add
    if (text.size() >= 2 && ((text.front() == '"' && text.back() == '"') ||
                             (text.front() == '\'' && text.back() == '\'')))
        text = trim(text.substr(1, text.size() - 2));

    for (const auto& name : characters) {
        if (text == name) {
            decision.kind = SpeakerDecision::Kind::character;
            decision.name = name;
            return decision;
        }
    }
    const std::string lowered = to_lower(text);
    if (lowered.find("<end chat>") != std::string::npos ||
        lowered.find("<end>") != std::string::npos || lowered == "end chat" ||
        lowered == "end") {
        decision.kind = SpeakerDecision::Kind::end;
        return decision;
    }
    if (lowered == "random") {
        decision.kind = SpeakerDecision::Kind::random;
        return decision;
    }
    // fuzzy: the reply mentions exactly one known name (longest match wins)
    const std::string* best = nullptr;
    for (const auto& name : characters) {
        if (contains_icase(text, name)) {
            if (!best || name.size() > best->size()) best = &name;
        }
    }
    if (best) {
        decision.kind = SpeakerDecision::Kind::character;
        decision.name = *best;
        return decision;
    }
    if (warnings)
        warnings->push_back("unparseable NSP output treated as random: " + text.substr(0, 60));
    decision.kind = SpeakerDecision::Kind::random;
    return decision;
}

namespace {

std::string history_block(const std::vector<Message>& history, std::string_view viewer) {
    std::string block;
    for (const auto& m : history) {
        const std::string rendered = render_message(m, viewer);
        if (rendered.empty()) continue;  // fully redacted message
        if (!block.empty()) block += "\n\n";
        block += m.character + ": " + rendered;
    }
    if (block.empty()) block = "(The conversation has not started yet.)";
    return block;
}

constexpr std::string_view kNspViewer = "nsp";  // non-owner: thoughts redacted

}  // namespace

SpeakerDecision next_speaker(const std::string& scenario,
                             const std::vector<std::string>& characters,
                             const std::vector<Message>& visible_history, ChatBackend& nsp,
                             const ChatParams& params, std::vector<std::string>* warnings) {
    std::vector<std::string> with_env = characters;
    if (std::find(with_env.begin(), with_env.end(), std::string(kEnvironmentName)) ==
        with_env.end())
        with_env.push_back(std::string(kEnvironmentName));

    ChatRequest req;
    req.system = prompts::fill(prompts::asset("nsp"),
                               {{"all_characters", join(with_env, ", ")},
                                {"scenario", scenario}});
    req.turns.push_back({"user", history_block(visible_history, kNspViewer)});
    req.params = params;
    const ChatResponse res = nsp.complete(req);
    return parse_speaker_decision(res.content, with_env, warnings);
}

// --- environment ---------------------------------------------------------------

std::optional<Message> environment_turn(const std::string& scenario,
                                        const std::vector<std::string>& major_characters,
                                        const std::vector<Message>& visible_history,
                                        ChatBackend& environment, const ChatParams& params,
                                        std::vector<std::string>* warnings) {
    ChatRequest req;
    req.system = prompts::fill(prompts::asset("environment"),
                               {{"major_characters", join(major_characters, ", ")},
                                {"scenario", scenario}});
    req.turns.push_back(
        {"user", history_block(visible_history, std::string_view(kEnvironmentName))});
    req.params = params;

    for (int attempt = 0; attempt < 2; ++attempt) {
        const ChatResponse res = environment.complete(req);
        if (!is_blank(res.content)) {
            std::vector<std::string> parse_warnings;
            Message m = make_message(kEnvironmentName, res.content, &parse_warnings);
            if (warnings)
                warnings->insert(warnings->end(), parse_warnings.begin(), parse_warnings.end());
            return m;
        }
        if (attempt == 0 && warnings)
            warnings->push_back("environment returned empty output; retrying once");
    }
    if (warnings) warnings->push_back("environment returned empty output twice; turn skipped");
    return std::nullopt;
}

// --- the loop -------------------------------------------------------------------

namespace {

// Actor chat turns: own past messages (thoughts included) become assistant
// turns; everything else, rendered for this character, is concatenated into
// user turns. This is the same shape the training exporter emits.
std::vector<ChatTurn> actor_turns(const std::string& character,
                                  const std::vector<Message>& history) {
    std::vector<ChatTurn> turns;
    std::string pending;
    auto flush_user = [&](bool opening) {
        if (pending.empty())
            turns.push_back({"user", opening ? std::string("(The conversation begins.)")
                                             : std::string("(Continue in character.)")});
        else
            turns.push_back({"user", std::move(pending)});
        pending.clear();
    };
    for (const auto& m : history) {
        if (m.character == character) {
            if (!pending.empty() || turns.empty()) flush_user(turns.empty());
            turns.push_back({"assistant", render_message(m, character)});
        } else {
            const std::string rendered = render_message(m, character);
            if (rendered.empty()) continue;
            if (!pending.empty()) pending += "\n\n";
            pending += m.character + ": " + rendered;
        }
    }
    flush_user(turns.empty());
    return turns;
}

// Models often prefix their reply with their own name; strip it.
std::string strip_self_prefix(const std::string& character, const std::string& content) {
    const std::string trimmed = trim(content);
    if (starts_with_icase(trimmed, character)) {
        std::string_view rest = std::string_view(trimmed).substr(character.size());
        if (!rest.empty() && rest.front() == ':') return trim(rest.substr(1));
    }
    return trimmed;
}

}  // namespace

Transcript simulate(const Conversation& conversation, const SceneContext& context,
                    const SimulationConfig& cfg, const SimulationBackends& backends) {
    if (!backends.actor || !backends.environment || !backends.nsp)
        throw ConfigError("simulate needs actor, environment and nsp backends");
    if (cfg.k < 0 || cfg.k > static_cast<int>(conversation.dialogues.size()))
        throw ConfigError("continue-from k=" + std::to_string(cfg.k) + " out of range");
    if (cfg.max_turns < 1) throw ConfigError("max_turns must be >= 1");

    Transcript transcript;
    transcript.book_title = context.book_title;
    transcript.actor_model = backends.actor->id();
    transcript.k = cfg.k;
    transcript.rng_seed = cfg.rng_seed;

    const std::vector<std::string> roster = conversation.participants();
    std::vector<std::string> pool = roster;  // resolution pool for "random"
    pool.push_back(std::string(kEnvironmentName));

    // per-character instructions are fixed for the whole simulation
    std::map<std::string, std::string> instructions;
    for (const auto& name : roster)
        instructions[name] = build_actor_prompt(name, conversation, context, cfg);

    auto log = std::make_shared<CallLog>();
    LoggingBackend actor(std::shared_ptr<ChatBackend>(backends.actor, [](ChatBackend*) {}), log);
    LoggingBackend environment(
        std::shared_ptr<ChatBackend>(backends.environment, [](ChatBackend*) {}), log);
    LoggingBackend nsp(std::shared_ptr<ChatBackend>(backends.nsp, [](ChatBackend*) {}), log);

    for (int i = 0; i < cfg.k; ++i)
        transcript.seeded_prefix.push_back(conversation.dialogues[static_cast<std::size_t>(i)]);

    Rng rng(derive_seed(cfg.rng_seed, "simulate"));
    std::vector<Message> history = transcript.seeded_prefix;
    transcript.end_reason = EndReason::turn_cap;

    // hard bound on loop iterations so skipped turns cannot spin forever
    const int max_iterations = cfg.max_turns * 4;
    int iterations = 0;

    try {
        while (static_cast<int>(transcript.simulated.size()) < cfg.max_turns &&
               iterations++ < max_iterations) {
            SpeakerDecision decision = next_speaker(conversation.scenario, roster, history, nsp,
                                                    cfg.nsp_params, &transcript.warnings);
            if (decision.kind == SpeakerDecision::Kind::end) {
                transcript.decisions.push_back({"", decision.raw_output});
                transcript.end_reason = EndReason::nsp_end;
                break;
            }

            std::string speaker;
            if (decision.kind == SpeakerDecision::Kind::character) {
                speaker = decision.name;
            } else {
                // uniform over the pool, excluding the immediately previous
                // speaker to avoid degenerate self-loops
                std::vector<std::string> candidates;
                const std::string* prev = history.empty() ? nullptr : &history.back().character;
                for (const auto& name : pool)
                    if (!prev || name != *prev) candidates.push_back(name);
                speaker = candidates[rng.next_index(candidates.size())];
            }
            transcript.decisions.push_back({speaker, decision.raw_output});

            if (speaker == kEnvironmentName) {
                auto msg = environment_turn(conversation.scenario, context.major_characters,
                                            history, environment, cfg.env_params,
                                            &transcript.warnings);
                if (msg) {
                    history.push_back(*msg);
                    transcript.simulated.push_back(std::move(*msg));
                }
                continue;
            }

            ChatRequest req;
            req.system = instructions.at(speaker);
            req.turns = actor_turns(speaker, history);
            req.params = cfg.actor_params;
            bool spoke = false;
            for (int attempt = 0; attempt < 2 && !spoke; ++attempt) {
                const ChatResponse res = actor.complete(req);
                if (res.finish_reason == FinishReason::length)
                    transcript.warnings.push_back("actor output for " + speaker +
                                                  " may be truncated (finish_reason=length)");
                const std::string content = strip_self_prefix(speaker, res.content);
                if (is_blank(content)) {
                    transcript.warnings.push_back("empty actor output from " + speaker +
                                                  (attempt == 0 ? "; retrying once"
                                                                : "; turn skipped"));
                    continue;
                }
                Message m = make_message(speaker, content, &transcript.warnings);
                if (!cfg.emit_inner_thoughts && m.has_thoughts()) {
                    m.segments.erase(std::remove_if(m.segments.begin(), m.segments.end(),
                                                    [](const Segment& s) {
                                                        return s.kind == SegmentKind::thought;
                                                    }),
                                     m.segments.end());
                    if (m.segments.empty()) {
                        transcript.warnings.push_back("actor output was thought-only; skipped");
                        break;
                    }
                }
                history.push_back(m);
                transcript.simulated.push_back(std::move(m));
                spoke = true;
            }
        }
    } catch (const Error& e) {
        // propagate, but hand the partial transcript to the caller
        transcript.warnings.push_back(std::string("simulation aborted: ") + e.what());
        transcript.call_log = log->snapshot();
        throw SimulationAborted(e.what(), std::move(transcript));
    }

    transcript.call_log = log->snapshot();
    return transcript;
}

}  // namespace gca
