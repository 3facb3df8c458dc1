#include "gca/exporter.hpp"

#include <algorithm>
#include <fstream>

#include "gca/curator.hpp"
#include "gca/errors.hpp"
#include "gca/prompts.hpp"
#include "gca/rng.hpp"
#include "gca/strings.hpp"

namespace gca {

ordered_json sample_to_json(const TrainingSample& sample) {
    ordered_json messages = ordered_json::array();
    for (const auto& m : sample.messages)
        messages.push_back(
            {{"role", m.role}, {"content", m.content}, {"train_target", m.train_target}});
    return ordered_json{{"kind", sample.kind},
                        {"character", sample.character},
                        {"system", sample.system},
                        {"messages", std::move(messages)}};
}

namespace {

Message strip_thoughts(Message m) {
    m.segments.erase(std::remove_if(m.segments.begin(), m.segments.end(),
                                    [](const Segment& s) {
                                        return s.kind == SegmentKind::thought;
                                    }),
                     m.segments.end());
    return m;
}

std::string train_system_prompt(const std::string& character, const Conversation& conversation,
                                const SceneContext& context, Rng& rng, double toggle_prob,
                                bool include_thoughts) {
    static const json pool = json::parse(prompts::asset("actor_train_variants"));
    const auto& variants = pool.at("variants");
    const auto& variant = variants.at(rng.next_index(variants.size()));

    std::map<std::string, std::string> vars{
        {"character", character},
        {"book_name", context.book_title},
        {"scenario", conversation.scenario},
    };

    std::vector<std::string> parts;
    auto add = [&](const char* key) {
        parts.push_back(prompts::fill(variant.at(key).get<std::string>(), vars));
    };
    add("intro");
    if (auto it = context.profiles.find(character); it != context.profiles.end()) {
        vars["character_profile"] = it->second;
        add("profile");
    }
    add("scenario");
    if (rng.next_bool(toggle_prob)) {
        std::string block;
        for (const auto& name : conversation.participants()) {
            if (name == character) continue;
            auto it = context.profiles.find(name);
            if (it == context.profiles.end()) continue;
            if (!block.empty()) block += "\n\n";
            block += name + ": " + it->second;
        }
        if (!block.empty()) {
            vars["other_character_profiles"] = block;
            add("other_profiles");
        }
    }
    if (rng.next_bool(toggle_prob) && !context.plot_summary.empty()) {
        vars["plot_summary"] = context.plot_summary;
        add("plot_summary");
    }
    if (const ConversationCharacter* kc = conversation.find_character(character);
        kc && !kc->motivation.empty()) {
        vars["motivation"] = kc->motivation;
        add("motivation");
    }
    parts.push_back(
        pool.at(include_thoughts ? "requirements" : "requirements_no_thoughts")
            .get<std::string>());
    return join(parts, "\n\n");
}

}  // namespace

std::vector<TrainingSample> build_actor_samples(const Conversation& conversation,
                                                const SceneContext& context,
                                                std::uint64_t rng_seed, double toggle_prob,
                                                bool from_train_split) {
    if (!from_train_split)
        throw HeldOutLeak("refusing to build training samples from a held-out conversation");

    std::vector<TrainingSample> samples;
    Rng rng(derive_seed(rng_seed, "actor-samples"));
    for (const auto& character : conversation.participants()) {
        const bool include_thoughts = rng.next_bool(toggle_prob);

        TrainingSample sample;
        sample.kind = "actor";
        sample.character = character;
        sample.system = train_system_prompt(character, conversation, context, rng, toggle_prob,
                                            include_thoughts);

        std::string pending;
        auto flush = [&]() {
            if (pending.empty()) return;
            sample.messages.push_back({"user", std::move(pending), false});
            pending.clear();
        };
        for (const auto& m : conversation.dialogues) {
            if (m.character == character) {
                flush();
                const Message target = include_thoughts ? m : strip_thoughts(m);
                if (target.segments.empty()) continue;
                sample.messages.push_back({"assistant", target.surface(), true});
            } else {
                // inputs are rendered from this character's viewpoint, so
                // other characters' thoughts never leak into training inputs
                const std::string rendered = render_message(m, character);
                if (rendered.empty()) continue;
                if (!pending.empty()) pending += "\n\n";
                pending += m.character + ": " + rendered;
            }
        }
        flush();
        samples.push_back(std::move(sample));
    }
    return samples;
}

namespace {

std::string nsp_history(const Conversation& conversation, std::size_t upto) {
    std::string block;
    for (std::size_t i = 0; i < upto; ++i) {
        const auto& m = conversation.dialogues[i];
        const std::string rendered = render_message(m, "nsp");
        if (rendered.empty()) continue;
        if (!block.empty()) block += "\n\n";
        block += m.character + ": " + rendered;
    }
    if (block.empty()) block = "(The conversation has not started yet.)";
    return block;
}

}  // namespace

std::vector<TrainingSample> build_nsp_samples(const Conversation& conversation) {
    std::vector<std::string> names = conversation.participants();
    names.push_back(std::string(kEnvironmentName));
    const std::string system = prompts::fill(
        prompts::asset("nsp"),
        {{"all_characters", join(names, ", ")}, {"scenario", conversation.scenario}});

    std::vector<TrainingSample> samples;
    const std::size_t total = conversation.dialogues.size();
    for (std::size_t i = 0; i <= total; ++i) {
        TrainingSample sample;
        sample.kind = "nsp";
        sample.system = system;
        const std::string label =
            i < total ? conversation.dialogues[i].character : std::string("<END CHAT>");
        sample.character = label;
        sample.messages.push_back({"user", nsp_history(conversation, i), false});
        sample.messages.push_back({"assistant", label, true});
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<TrainingSample> build_env_samples(const Conversation& conversation) {
    const bool has_env = std::any_of(
        conversation.dialogues.begin(), conversation.dialogues.end(),
        [](const Message& m) { return m.character == kEnvironmentName; });
    if (!has_env) return {};

    std::vector<std::string> majors;
    for (const auto& kc : conversation.key_characters) majors.push_back(kc.name);

    TrainingSample sample;
    sample.kind = "environment";
    sample.character = std::string(kEnvironmentName);
    sample.system = prompts::fill(prompts::asset("environment"),
                                  {{"major_characters", join(majors, ", ")},
                                   {"scenario", conversation.scenario}});
    std::string pending;
    auto flush = [&]() {
        if (pending.empty()) return;
        sample.messages.push_back({"user", std::move(pending), false});
        pending.clear();
    };
    for (const auto& m : conversation.dialogues) {
        if (m.character == kEnvironmentName) {
            flush();
            sample.messages.push_back({"assistant", m.surface(), true});
        } else {
            const std::string rendered =
                render_message(m, std::string_view(kEnvironmentName));
            if (rendered.empty()) continue;
            if (!pending.empty()) pending += "\n\n";
            pending += m.character + ": " + rendered;
        }
    }
    flush();
    return {std::move(sample)};
}

std::size_t export_training_file(const BookRecord& book, std::uint64_t rng_seed,
                                 double toggle_prob, const std::string& out_path) {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write training file: " + out_path);

    const HoldoutSplit split = split_holdout(book);
    std::size_t count = 0;
    for (int p : split.train) {
        const Plot& plot = book.plots[static_cast<std::size_t>(p)];
        for (std::size_t c = 0; c < plot.conversations.size(); ++c) {
            const Conversation& conv = plot.conversations[c];
            SceneContext context = make_scene_context(book, p, conv);
            const std::uint64_t conv_seed = derive_seed(
                rng_seed, book.title + "#" + std::to_string(p) + "#" + std::to_string(c));
            auto actor = build_actor_samples(conv, context, conv_seed, toggle_prob, true);
            auto nsp = build_nsp_samples(conv);
            auto env = build_env_samples(conv);
            for (const auto* batch : {&actor, &nsp, &env}) {
                for (const auto& sample : *batch) {
                    out << sample_to_json(sample).dump() << "\n";
                    ++count;
                }
            }
        }
    }
    return count;
}

}  // namespace gca
