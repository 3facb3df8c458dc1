#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gca {

// The reserved name of the scene-feedback role. User corpora must not define
// a character with this name.
inline constexpr std::string_view kEnvironmentName = "Environment";

// Reserved viewer ids for rendering. Any other viewer string is treated as a
// character name; thoughts are visible only to their owner and to
// judge_with_thoughts.
inline constexpr std::string_view kJudgeWithThoughts = "judge_with_thoughts";
inline constexpr std::string_view kJudgeWithoutThoughts = "judge_without_thoughts";

enum class SegmentKind { thought, action, speech };

std::string_view to_string(SegmentKind kind);

// One span of an utterance. Thought text was delimited by [] in surface form,
// action by (), speech is bare. The stored text carries no delimiters of its
// own kind and is whitespace-normalized.
struct Segment {
    SegmentKind kind = SegmentKind::speech;
    std::string text;

    bool operator==(const Segment&) const = default;
};

// One utterance by a character or the Environment, in surface order.
struct Message {
    std::string character;
    std::vector<Segment> segments;

    bool operator==(const Message&) const = default;

    bool has_thoughts() const;
    // Full surface form, as the owner sees it.
    std::string surface() const;
};

struct ParsedSegments {
    std::vector<Segment> segments;
    std::vector<std::string> warnings;
};

// Splits a raw surface string into thought/action/speech segments.
// Never fails on non-blank input: unmatched opening delimiters downgrade the
// remainder to speech and add a warning. Throws EmptyMessage on blank input.
ParsedSegments parse_message(std::string_view raw);

std::string render_segment(const Segment& seg);

// Renders the message for a viewer. Thought segments are included only when
// the viewer is the owner or "judge_with_thoughts"; delimiters are restored
// exactly. May return an empty string if every segment was redacted.
std::string render_message(const Message& m, std::string_view viewer);

// Builds a Message from a character name and raw surface text. Environment
// messages have thought segments stripped (with a warning) to uphold the
// no-thoughts invariant of the role.
Message make_message(std::string_view character, std::string_view raw,
                     std::vector<std::string>* warnings = nullptr);

}  // namespace gca
