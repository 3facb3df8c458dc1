#include "gca/retrieval.hpp"

#include <algorithm>
#include <fstream>

#include "gca/curator.hpp"
#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::string_view to_string(KnowledgeKind k) {
    switch (k) {
        case KnowledgeKind::experience: return "experience";
        case KnowledgeKind::conversation: return "conversation";
        case KnowledgeKind::raw_text: return "raw_text";
    }
    return "experience";
}

KnowledgeKind knowledge_kind_from_string(std::string_view s) {
    if (s == "experience") return KnowledgeKind::experience;
    if (s == "conversation") return KnowledgeKind::conversation;
    if (s == "raw_text") return KnowledgeKind::raw_text;
    throw SchemaViolation("unknown knowledge kind: " + std::string(s));
}

RetrievalConfig RetrievalConfig::preset(std::string_view name) {
    if (name == "Base") return {0, 0, 0};
    if (name == "RawText") return {0, 0, 1};
    if (name == "Conv") return {0, 1, 0};
    if (name == "Expr3") return {3, 0, 0};
    if (name == "Expr3+Conv") return {3, 1, 0};
    if (name == "Expr10+Conv") return {10, 1, 0};
    throw ConfigError("unknown retrieval preset: " + std::string(name));
}

std::vector<std::string> RetrievalConfig::preset_names() {
    return {"Base", "RawText", "Conv", "Expr3", "Expr3+Conv", "Expr10+Conv"};
}

KnowledgeIndex build_index(const BookRecord& book, Embedder& embedder, bool train_plots_only) {
    const auto split = split_holdout(book);
    std::vector<bool> indexed(book.plots.size(), true);
    if (train_plots_only) {
        indexed.assign(book.plots.size(), false);
        for (int i : split.train) indexed[static_cast<size_t>(i)] = true;
    }

    KnowledgeIndex index;
    index.embedder_id = embedder.id();
    index.dimension = embedder.dimension();

    std::vector<std::string> texts;
    std::vector<KnowledgeItem> items;
    auto add = [&](std::string character, KnowledgeKind kind, std::string text, int plot) {
        if (is_blank(text)) return;
        KnowledgeItem item;
        item.character = std::move(character);
        item.source_kind = kind;
        item.plot_index = plot;
        item.text = text;
        items.push_back(std::move(item));
        texts.push_back(std::move(text));
    };

    for (size_t p = 0; p < book.plots.size(); ++p) {
        if (!indexed[p]) continue;
        const Plot& plot = book.plots[p];
        const int pi = static_cast<int>(p);
        for (const auto& kc : plot.key_characters)
            add(kc.name, KnowledgeKind::experience, kc.summary, pi);
        for (const auto& conv : plot.conversations) {
            std::string transcript;
            for (const auto& m : conv.dialogues) {
                if (!transcript.empty()) transcript += "\n";
                transcript += m.character + ": " + m.surface();
            }
            for (const auto& name : conv.participants())
                add(name, KnowledgeKind::conversation, transcript, pi);
        }
        if (plot.raw_text) {
            for (const auto& kc : plot.key_characters)
                add(kc.name, KnowledgeKind::raw_text, *plot.raw_text, pi);
        }
    }

    if (!texts.empty()) {
        auto vectors = embedder.embed(texts);
        for (size_t i = 0; i < items.size(); ++i) items[i].vector = std::move(vectors[i]);
    }
    index.items = std::move(items);
    return index;
}

std::vector<Snippet> retrieve(const KnowledgeIndex& index, Embedder& embedder,
                              const std::string& character, const std::string& query,
                              const RetrievalConfig& cfg, size_t max_snippet_chars,
                              std::vector<std::string>* warnings) {
    struct Scored {
        double similarity;
        const KnowledgeItem* item;
    };
    const auto query_vec = embedder.embed({query}).front();

    auto top_n = [&](KnowledgeKind kind, int n) {
        std::vector<Scored> scored;
        for (const auto& item : index.items) {
            if (item.character != character || item.source_kind != kind) continue;
            scored.push_back({cosine(query_vec, item.vector), &item});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            return a.item->plot_index < b.item->plot_index;
        });
        if (static_cast<int>(scored.size()) > n) scored.resize(static_cast<size_t>(n));
        return scored;
    };

    std::vector<Snippet> out;
    auto emit = [&](const std::vector<Scored>& scored) {
        for (const auto& s : scored) {
            Snippet snip;
            snip.kind = s.item->source_kind;
            snip.similarity = s.similarity;
            snip.plot_index = s.item->plot_index;
            snip.text = s.item->text;
            if (snip.text.size() > max_snippet_chars) {
                snip.text.resize(max_snippet_chars);
                if (warnings)
                    warnings->push_back("truncated " + std::string(to_string(snip.kind)) +
                                        " snippet for " + character + " to " +
                                        std::to_string(max_snippet_chars) + " chars");
            }
            out.push_back(std::move(snip));
        }
    };
    if (cfg.n_experience > 0) {
        // experiences are presented in book order
        auto scored = top_n(KnowledgeKind::experience, cfg.n_experience);
        std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            return a.item->plot_index < b.item->plot_index;
        });
        emit(scored);
    }
    if (cfg.n_conversation > 0) emit(top_n(KnowledgeKind::conversation, cfg.n_conversation));
    if (cfg.n_raw > 0) emit(top_n(KnowledgeKind::raw_text, cfg.n_raw));
    return out;
}

std::string snippets_to_text(const std::vector<Snippet>& snippets) {
    std::string out;
    for (const auto& s : snippets) {
        if (!out.empty()) out += "\n\n";
        out += s.text;
    }
    return out;
}

void save_index(const KnowledgeIndex& index, const std::string& items_path,
                const std::string& manifest_path) {
    {
        std::ofstream out(items_path);
        if (!out) throw Error("cannot write index: " + items_path);
        for (const auto& item : index.items) {
            ordered_json line{{"character", item.character},
                              {"source_kind", std::string(to_string(item.source_kind))},
                              {"text", item.text},
                              {"plot_index", item.plot_index},
                              {"vector", item.vector}};
            out << line.dump() << "\n";
        }
    }
    std::ofstream manifest(manifest_path);
    if (!manifest) throw Error("cannot write manifest: " + manifest_path);
    manifest << ordered_json{{"embedder_id", index.embedder_id},
                             {"dimension", index.dimension},
                             {"count", index.items.size()}}
                    .dump(2)
             << "\n";
}

KnowledgeIndex load_index(const std::string& items_path, const std::string& manifest_path) {
    KnowledgeIndex index;
    {
        std::ifstream in(manifest_path);
        if (!in) throw Error("cannot open manifest: " + manifest_path);
        json doc = json::parse(in);
        index.embedder_id = doc.value("embedder_id", "");
        index.dimension = doc.value("dimension", 0);
    }
    std::ifstream in(items_path);
    if (!in) throw Error("cannot open index: " + items_path);
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) continue;
        json doc = json::parse(line);
        KnowledgeItem item;
        item.character = doc.value("character", "");
        item.source_kind = knowledge_kind_from_string(doc.value("source_kind", "experience"));
        item.text = doc.value("text", "");
        item.plot_index = doc.value("plot_index", 0);
        item.vector = doc.value("vector", std::vector<float>{});
        index.items.push_back(std::move(item));
    }
    return index;
}

}  // namespace gca
