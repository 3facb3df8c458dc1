#include "gca/message.hpp"

#include <algorithm>

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::thought: return "thought";
        case SegmentKind::action: return "action";
        case SegmentKind::speech: return "speech";
    }
    return "speech";
}

bool Message::has_thoughts() const {
    return std::any_of(segments.begin(), segments.end(),
                       [](const Segment& s) { return s.kind == SegmentKind::thought; });
}

std::string Message::surface() const {
    return render_message(*this, character);
}

namespace {

void push_speech(std::vector<Segment>& out, std::string_view raw) {
    std::string text = normalize_whitespace(raw);
    if (!text.empty()) out.push_back({SegmentKind::speech, std::move(text)});
}

}  // namespace

ParsedSegments parse_message(std::string_view raw) {
    if (is_blank(raw)) throw EmptyMessage("message is empty or whitespace-only");

    ParsedSegments result;
    size_t plain_start = 0;
    size_t i = 0;
    while (i < raw.size()) {
        char c = raw[i];
        if (c != '[' && c != '(') {
            ++i;
            continue;
        }
        const char closer = (c == '[') ? ']' : ')';
        const size_t close = raw.find(closer, i + 1);
        if (close == std::string_view::npos) {
            // Unmatched opener: the rest of the message, delimiter included,
            // degrades to speech.
            result.warnings.push_back(std::string("unmatched '") + c +
                                      "'; treating remainder as speech");
            push_speech(result.segments, raw.substr(plain_start));
            plain_start = raw.size();
            break;
        }
        push_speech(result.segments, raw.substr(plain_start, i - plain_start));
        std::string inner = normalize_whitespace(raw.substr(i + 1, close - i - 1));
        if (inner.empty()) {
            result.warnings.push_back(std::string("empty '") + c + closer + "' pair dropped");
        } else {
            result.segments.push_back(
                {c == '[' ? SegmentKind::thought : SegmentKind::action, std::move(inner)});
        }
        i = close + 1;
        plain_start = i;
    }
    if (plain_start < raw.size()) push_speech(result.segments, raw.substr(plain_start));

    if (result.segments.empty()) {
        // e.g. "[]" -- nothing survived normalization; keep the raw text so
        // the message is never silently dropped.
        result.warnings.push_back("no segments parsed; keeping raw text as speech");
        result.segments.push_back({SegmentKind::speech, normalize_whitespace(raw)});
    }
    return result;
}

std::string render_segment(const Segment& seg) {
    switch (seg.kind) {
        case SegmentKind::thought: return "[" + seg.text + "]";
        case SegmentKind::action: return "(" + seg.text + ")";
        case SegmentKind::speech: return seg.text;
    }
    return seg.text;
}

std::string render_message(const Message& m, std::string_view viewer) {
    const bool see_thoughts = (viewer == m.character) || (viewer == kJudgeWithThoughts);
    std::string out;
    for (const Segment& seg : m.segments) {
        if (seg.kind == SegmentKind::thought && !see_thoughts) continue;
        if (!out.empty()) out.push_back(' ');
        out += render_segment(seg);
    }
    return out;
}

Message make_message(std::string_view character, std::string_view raw,
                     std::vector<std::string>* warnings) {
    ParsedSegments parsed = parse_message(raw);
    Message m;
    m.character = std::string(character);
    if (character == kEnvironmentName) {
        bool stripped = false;
        for (auto& seg : parsed.segments) {
            if (seg.kind == SegmentKind::thought) stripped = true;
        }
        if (stripped) {
            parsed.segments.erase(
                std::remove_if(parsed.segments.begin(), parsed.segments.end(),
                               [](const Segment& s) { return s.kind == SegmentKind::thought; }),
                parsed.segments.end());
            parsed.warnings.push_back("Environment message contained thoughts; stripped");
            if (parsed.segments.empty())
                parsed.segments.push_back({SegmentKind::speech, normalize_whitespace(raw)});
        }
    }
    m.segments = std::move(parsed.segments);
    if (warnings)
        warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
    return m;
}

}  // namespace gca
