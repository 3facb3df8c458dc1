#include "gca/corpus.hpp"

#include <fstream>
#include <set>

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(PlotState s) {
    return s == PlotState::finished ? "finished" : "truncated";
}

PlotState plot_state_from_string(std::string_view s) {
    if (s == "finished") return PlotState::finished;
    if (s == "truncated") return PlotState::truncated;
    throw SchemaViolation("unknown state: " + std::string(s));
}

const ConversationCharacter* Conversation::find_character(std::string_view name) const {
    for (const auto& kc : key_characters)
        if (kc.name == name) return &kc;
    return nullptr;
}

std::vector<std::string> Conversation::participants() const {
    std::vector<std::string> out;
    auto add = [&out](const std::string& name) {
        if (name == kEnvironmentName) return;
        for (const auto& existing : out)
            if (existing == name) return;
        out.push_back(name);
    };
    for (const auto& kc : key_characters) add(kc.name);
    for (const auto& m : dialogues) add(m.character);
    return out;
}

const CharacterRecord* BookRecord::resolve(std::string_view name) const {
    auto it = characters.find(std::string(name));
    if (it != characters.end()) return &it->second;
    for (const auto& [canonical, rec] : characters) {
        for (const auto& alias : rec.aliases)
            if (alias == name) return &rec;
    }
    return nullptr;
}

std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::DuplicateCanonicalName: return "DuplicateCanonicalName";
        case ViolationCode::AliasConflict: return "AliasConflict";
        case ViolationCode::RangeViolation: return "RangeViolation";
        case ViolationCode::EmptyFinishedConversation: return "EmptyFinishedConversation";
        case ViolationCode::ReservedName: return "ReservedName";
        case ViolationCode::MissingProfile: return "MissingProfile";
        case ViolationCode::MinorCharacter: return "MinorCharacter";
    }
    return "?";
}

std::vector<Violation> validate_book(const BookRecord& book) {
    std::vector<Violation> out;

    if (book.characters.count(std::string(kEnvironmentName)))
        out.push_back({ViolationCode::ReservedName, "characters",
                       "\"Environment\" is reserved and cannot be a character"});

    // alias -> set of canonical owners; canonical names are map keys and thus
    // unique by construction, but a record may disagree with its key.
    std::map<std::string, std::set<std::string>> alias_owners;
    for (const auto& [canonical, rec] : book.characters) {
        if (rec.canonical_name != canonical)
            out.push_back({ViolationCode::DuplicateCanonicalName, "characters." + canonical,
                           "record canonical_name '" + rec.canonical_name +
                               "' disagrees with its key"});
        for (const auto& alias : rec.aliases) alias_owners[alias].insert(canonical);
        if (rec.major && !rec.profile)
            out.push_back({ViolationCode::MissingProfile, "characters." + canonical,
                           "major character without profile"});
    }
    for (const auto& [alias, owners] : alias_owners) {
        if (owners.size() > 1)
            out.push_back({ViolationCode::AliasConflict, "characters",
                           "alias '" + alias + "' maps to " + std::to_string(owners.size()) +
                               " canonical names"});
    }

    for (size_t p = 0; p < book.plots.size(); ++p) {
        const Plot& plot = book.plots[p];
        const std::string ppath = "plots[" + std::to_string(p) + "]";
        if (plot.prominence < 1 || plot.prominence > 100)
            out.push_back({ViolationCode::RangeViolation, ppath,
                           "prominence " + std::to_string(plot.prominence) + " outside [1,100]"});
        for (size_t c = 0; c < plot.conversations.size(); ++c) {
            const Conversation& conv = plot.conversations[c];
            const std::string cpath = ppath + ".conversation[" + std::to_string(c) + "]";
            if (conv.state == PlotState::finished && conv.dialogues.empty())
                out.push_back({ViolationCode::EmptyFinishedConversation, cpath,
                               "finished conversation has no dialogues"});
            for (const auto& m : conv.dialogues) {
                if (m.character == kEnvironmentName) continue;
                if (!conv.find_character(m.character))
                    out.push_back({ViolationCode::MinorCharacter, cpath,
                                   "speaker '" + m.character + "' is not a key character"});
            }
        }
    }
    return out;
}

bool is_valid(const std::vector<Violation>& violations) {
    for (const auto& v : violations)
        if (v.code != ViolationCode::MinorCharacter) return false;
    return true;
}

// --- JSON ---------------------------------------------------------------

namespace {

ordered_json message_to_json(const Message& m) {
    return ordered_json{{"character", m.character}, {"message", m.surface()}};
}

Message message_from_json(const json& doc, std::vector<std::string>* warnings) {
    if (!doc.contains("character") || !doc.contains("message"))
        throw SchemaViolation("dialogue entry needs 'character' and 'message'");
    return make_message(doc.at("character").get<std::string>(),
                        doc.at("message").get<std::string>(), warnings);
}

}  // namespace

ordered_json conversation_to_json(const Conversation& conv) {
    ordered_json kc = ordered_json::array();
    for (const auto& c : conv.key_characters)
        kc.push_back(ordered_json{{"name", c.name}, {"motivation", c.motivation}});
    ordered_json dialogues = ordered_json::array();
    for (const auto& m : conv.dialogues) dialogues.push_back(message_to_json(m));
    return ordered_json{{"scenario", conv.scenario},
                        {"topic", conv.topic},
                        {"key_characters", std::move(kc)},
                        {"dialogues", std::move(dialogues)},
                        {"state", std::string(to_string(conv.state))}};
}

Conversation conversation_from_json(const json& doc, std::vector<std::string>* warnings) {
    Conversation conv;
    conv.scenario = doc.value("scenario", "");
    conv.topic = doc.value("topic", "");
    if (doc.contains("key_characters")) {
        for (const auto& kc : doc.at("key_characters")) {
            ConversationCharacter c;
            c.name = kc.value("name", "");
            c.motivation = kc.value("motivation", "");
            conv.key_characters.push_back(std::move(c));
        }
    }
    if (doc.contains("dialogues")) {
        for (const auto& d : doc.at("dialogues"))
            conv.dialogues.push_back(message_from_json(d, warnings));
    }
    conv.state = plot_state_from_string(doc.value("state", "finished"));
    return conv;
}

ordered_json plot_to_json(const Plot& plot) {
    ordered_json kc = ordered_json::array();
    for (const auto& c : plot.key_characters)
        kc.push_back(ordered_json{
            {"name", c.name}, {"description", c.description}, {"summary", c.summary}});
    ordered_json convs = ordered_json::array();
    for (const auto& c : plot.conversations) convs.push_back(conversation_to_json(c));
    ordered_json out{{"chapter_title", plot.chapter_title ? ordered_json(*plot.chapter_title)
                                                          : ordered_json(nullptr)},
                     {"first_sentence", plot.first_sentence},
                     {"last_sentence", plot.last_sentence},
                     {"prominence", plot.prominence},
                     {"summary", plot.summary},
                     {"key_characters", std::move(kc)},
                     {"conversation", std::move(convs)},
                     {"state", std::string(to_string(plot.state))}};
    if (plot.raw_text) out["raw_text"] = *plot.raw_text;
    return out;
}

Plot plot_from_json(const json& doc, std::vector<std::string>* warnings) {
    Plot plot;
    if (doc.contains("chapter_title") && !doc.at("chapter_title").is_null()) {
        // extraction models sometimes emit the literal string "None"
        auto title = doc.at("chapter_title").get<std::string>();
        if (title != "None") plot.chapter_title = title;
    }
    plot.first_sentence = doc.value("first_sentence", "");
    plot.last_sentence = doc.value("last_sentence", "");
    if (doc.contains("prominence")) {
        const auto& p = doc.at("prominence");
        // the prompt describes prominence in prose, so tolerate strings
        if (p.is_number())
            plot.prominence = p.get<int>();
        else if (p.is_string())
            plot.prominence = std::stoi(p.get<std::string>());
    }
    plot.summary = doc.value("summary", "");
    if (doc.contains("key_characters")) {
        for (const auto& kc : doc.at("key_characters")) {
            PlotCharacter c;
            c.name = kc.value("name", "");
            c.description = kc.value("description", "");
            c.summary = kc.value("summary", "");
            plot.key_characters.push_back(std::move(c));
        }
    }
    if (doc.contains("conversation")) {
        for (const auto& c : doc.at("conversation"))
            plot.conversations.push_back(conversation_from_json(c, warnings));
    }
    plot.state = plot_state_from_string(doc.value("state", "finished"));
    if (doc.contains("raw_text") && !doc.at("raw_text").is_null())
        plot.raw_text = doc.at("raw_text").get<std::string>();
    return plot;
}

namespace {

ordered_json character_to_json(const CharacterRecord& rec) {
    ordered_json exps = ordered_json::array();
    for (const auto& e : rec.experiences)
        exps.push_back(ordered_json{{"plot_index", e.plot_index},
                                    {"description", e.description},
                                    {"summary", e.summary}});
    ordered_json refs = ordered_json::array();
    for (const auto& r : rec.conversation_refs)
        refs.push_back(ordered_json{{"plot_index", r.plot_index},
                                    {"conversation_index", r.conversation_index}});
    return ordered_json{{"canonical_name", rec.canonical_name},
                        {"aliases", rec.aliases},
                        {"major", rec.major},
                        {"profile", rec.profile ? ordered_json(*rec.profile) : ordered_json(nullptr)},
                        {"experiences", std::move(exps)},
                        {"conversation_refs", std::move(refs)}};
}

CharacterRecord character_from_json(const std::string& key, const json& doc) {
    CharacterRecord rec;
    rec.canonical_name = doc.value("canonical_name", key);
    if (doc.contains("aliases")) rec.aliases = doc.at("aliases").get<std::vector<std::string>>();
    rec.major = doc.value("major", false);
    if (doc.contains("profile") && !doc.at("profile").is_null())
        rec.profile = doc.at("profile").get<std::string>();
    if (doc.contains("experiences")) {
        for (const auto& e : doc.at("experiences")) {
            CharacterExperience exp;
            exp.plot_index = e.value("plot_index", 0);
            exp.description = e.value("description", "");
            exp.summary = e.value("summary", "");
            rec.experiences.push_back(std::move(exp));
        }
    }
    if (doc.contains("conversation_refs")) {
        for (const auto& r : doc.at("conversation_refs"))
            rec.conversation_refs.push_back(
                {r.value("plot_index", 0), r.value("conversation_index", 0)});
    }
    return rec;
}

}  // namespace

ordered_json book_to_json(const BookRecord& book) {
    ordered_json plots = ordered_json::array();
    for (const auto& p : book.plots) plots.push_back(plot_to_json(p));
    ordered_json chars = ordered_json::object();
    for (const auto& [name, rec] : book.characters) chars[name] = character_to_json(rec);
    return ordered_json{{"title", book.title},
                        {"author", book.author},
                        {"plots", std::move(plots)},
                        {"characters", std::move(chars)}};
}

BookRecord book_from_json(const json& doc, std::vector<std::string>* warnings) {
    BookRecord book;
    book.title = doc.value("title", "");
    book.author = doc.value("author", "");
    if (doc.contains("plots")) {
        for (const auto& p : doc.at("plots")) book.plots.push_back(plot_from_json(p, warnings));
    }
    if (doc.contains("characters")) {
        for (const auto& [name, rec] : doc.at("characters").items()) {
            if (name == kEnvironmentName)
                throw SchemaViolation(
                    "\"Environment\" is a reserved name and cannot be a corpus character");
            book.characters.emplace(name, character_from_json(name, rec));
        }
    }
    return book;
}

BookRecord load_book(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path);
    json doc = json::parse(in);
    return book_from_json(doc, warnings);
}

void save_book(const BookRecord& book, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write corpus file: " + path);
    out << book_to_json(book).dump(2) << "\n";
}

}  // namespace gca
