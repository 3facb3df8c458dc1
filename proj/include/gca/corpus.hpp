#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gca/message.hpp"

namespace gca {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class PlotState { finished, truncated };

std::string_view to_string(PlotState s);
PlotState plot_state_from_string(std::string_view s);

// Conversation-level character entry: who takes part and what drives them.
struct ConversationCharacter {
    std::string name;
    std::string motivation;

    bool operator==(const ConversationCharacter&) const = default;
};

struct Conversation {
    std::string scenario;
    std::string topic;
    std::vector<ConversationCharacter> key_characters;
    std::vector<Message> dialogues;
    PlotState state = PlotState::finished;

    bool operator==(const Conversation&) const = default;

    const ConversationCharacter* find_character(std::string_view name) const;
    // Participant names: key characters plus dialogue speakers, Environment
    // excluded, in first-appearance order.
    std::vector<std::string> participants() const;
};

// Plot-level character entry from extraction.
struct PlotCharacter {
    std::string name;
    std::string description;
    std::string summary;

    bool operator==(const PlotCharacter&) const = default;
};

struct Plot {
    std::optional<std::string> chapter_title;
    std::string first_sentence;
    std::string last_sentence;
    int prominence = 1;  // 1..100
    std::string summary;
    std::vector<PlotCharacter> key_characters;
    std::vector<Conversation> conversations;
    PlotState state = PlotState::finished;
    // Populated by span location against the source text; optional on disk.
    std::optional<std::string> raw_text;

    bool operator==(const Plot&) const = default;
};

// Where a character shows up: plot index plus that plot's per-character summary.
struct CharacterExperience {
    int plot_index = 0;
    std::string description;
    std::string summary;

    bool operator==(const CharacterExperience&) const = default;
};

struct ConversationRef {
    int plot_index = 0;
    int conversation_index = 0;

    bool operator==(const ConversationRef&) const = default;
    auto operator<=>(const ConversationRef&) const = default;
};

struct CharacterRecord {
    std::string canonical_name;
    std::vector<std::string> aliases;
    bool major = false;
    std::optional<std::string> profile;
    std::vector<CharacterExperience> experiences;  // in book order
    std::vector<ConversationRef> conversation_refs;

    bool operator==(const CharacterRecord&) const = default;
};

struct BookRecord {
    std::string title;
    std::string author;
    std::vector<Plot> plots;
    std::map<std::string, CharacterRecord> characters;  // canonical name -> record

    bool operator==(const BookRecord&) const = default;

    // Resolves an alias or canonical name; returns nullptr when unknown.
    const CharacterRecord* resolve(std::string_view name) const;
};

// --- validation ---------------------------------------------------------

enum class ViolationCode {
    DuplicateCanonicalName,
    AliasConflict,
    RangeViolation,
    EmptyFinishedConversation,
    ReservedName,
    MissingProfile,
    MinorCharacter,  // informational flag, not a rejection
};

std::string_view to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string where;   // e.g. "plots[3].conversation[0]"
    std::string detail;
};

// Reports every invariant violation; an empty list means the book is valid.
// MinorCharacter entries are informational (dialogue speakers that are not
// key characters); they do not make the book invalid.
std::vector<Violation> validate_book(const BookRecord& book);
bool is_valid(const std::vector<Violation>& violations);

// --- JSON I/O -----------------------------------------------------------

// The on-disk schema mirrors the extraction-prompt schema: plots carry
// "conversation" arrays whose "dialogues" hold {"character","message"} pairs
// with the bracket grammar in the surface string; segments are not pre-split.
ordered_json book_to_json(const BookRecord& book);
BookRecord book_from_json(const json& doc, std::vector<std::string>* warnings = nullptr);

BookRecord load_book(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_book(const BookRecord& book, const std::string& path);

ordered_json conversation_to_json(const Conversation& conv);
Conversation conversation_from_json(const json& doc, std::vector<std::string>* warnings = nullptr);

ordered_json plot_to_json(const Plot& plot);
Plot plot_from_json(const json& doc, std::vector<std::string>* warnings = nullptr);

}  // namespace gca
