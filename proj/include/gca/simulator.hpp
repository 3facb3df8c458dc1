#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/errors.hpp"
#include "gca/gateway.hpp"

namespace gca {

struct SimulationConfig {
    int k = 0;              // continue-from prefix length; must be <= |original dialogues|
    int max_turns = 20;     // cap on simulated messages
    bool include_other_profiles = true;
    bool include_plot_summary = false;
    bool include_motivations = true;
    bool emit_inner_thoughts = true;
    std::uint64_t rng_seed = 0;
    ChatParams actor_params{/*temperature=*/0.7};
    ChatParams nsp_params{/*temperature=*/0.0};
    ChatParams env_params{/*temperature=*/0.0};
};

struct SpeakerDecision {
    enum class Kind { character, random, end };
    Kind kind = Kind::random;
    std::string name;        // set for kind == character
    std::string raw_output;  // verbatim model output
};

struct DecisionRecord {
    std::string chosen_speaker;  // resolved speaker ("" when the turn ended)
    std::string raw_nsp_output;
};

enum class EndReason { nsp_end, turn_cap };

std::string_view to_string(EndReason r);

struct Transcript {
    std::string book_title;
    int plot_index = -1;
    int conversation_index = -1;
    std::string sample_id;
    std::string actor_model;

    std::vector<Message> seeded_prefix;  // the first k original messages
    std::vector<Message> simulated;
    std::vector<DecisionRecord> decisions;
    EndReason end_reason = EndReason::nsp_end;
    std::vector<std::string> warnings;
    std::vector<ChatExchange> call_log;  // provenance

    int k = 0;
    std::uint64_t rng_seed = 0;
};

ordered_json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const json& doc);
void save_transcripts(const std::vector<Transcript>& transcripts, const std::string& path);
std::vector<Transcript> load_transcripts(const std::string& path);

struct SimulationBackends {
    ChatBackend* actor = nullptr;
    ChatBackend* environment = nullptr;
    ChatBackend* nsp = nullptr;
};

// Raised when a backend fails mid-simulation; carries the partial transcript
// accumulated so far.
struct SimulationAborted : Error {
    SimulationAborted(const std::string& what, Transcript t)
        : Error(what), partial(std::move(t)) {}
    Transcript partial;
};

// Context handed to prompt building: who is in the book, their profiles,
// the plot summary, and optional retrieved background per character.
struct SceneContext {
    std::string book_title;
    std::string plot_summary;
    std::map<std::string, std::string> profiles;              // canonical name -> profile
    std::map<std::string, std::string> retrieved_background;  // canonical name -> block
    std::vector<std::string> major_characters;
};

SceneContext make_scene_context(const BookRecord& book, int plot_index,
                                const Conversation& conversation);

// The fixed role-playing instruction: profile, scenario, then the
// conditional sections in template order. Throws MissingProfile when a major
// character has none.
std::string build_actor_prompt(const std::string& character, const Conversation& conversation,
                               const SceneContext& context, const SimulationConfig& cfg);

// Parses an NSP model reply: exact name, end marker ("<END CHAT>" canonical,
// "<END>" accepted), "random", then case-insensitive substring matching; an
// unparseable reply degrades to random with a warning.
SpeakerDecision parse_speaker_decision(const std::string& raw,
                                       const std::vector<std::string>& characters,
                                       std::vector<std::string>* warnings = nullptr);

SpeakerDecision next_speaker(const std::string& scenario,
                             const std::vector<std::string>& characters,
                             const std::vector<Message>& visible_history, ChatBackend& nsp,
                             const ChatParams& params = {},
                             std::vector<std::string>* warnings = nullptr);

// One environment turn; thought segments are stripped. An empty reply is
// retried once, then the turn is skipped (returns nullopt) with a warning.
std::optional<Message> environment_turn(const std::string& scenario,
                                        const std::vector<std::string>& major_characters,
                                        const std::vector<Message>& visible_history,
                                        ChatBackend& environment, const ChatParams& params = {},
                                        std::vector<std::string>* warnings = nullptr);

// Runs the full multi-agent loop: seed k originals, then NSP-driven turns
// until an end signal or max_turns simulated messages.
Transcript simulate(const Conversation& conversation, const SceneContext& context,
                    const SimulationConfig& cfg, const SimulationBackends& backends);

}  // namespace gca
