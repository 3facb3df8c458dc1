#pragma once

#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/embedder.hpp"

namespace gca {

enum class KnowledgeKind { experience, conversation, raw_text };

std::string_view to_string(KnowledgeKind k);
KnowledgeKind knowledge_kind_from_string(std::string_view s);

struct KnowledgeItem {
    std::string character;
    KnowledgeKind source_kind = KnowledgeKind::experience;
    std::string text;
    int plot_index = 0;
    std::vector<float> vector;
};

// How many snippets to pull per source kind.
struct RetrievalConfig {
    int n_experience = 0;
    int n_conversation = 0;
    int n_raw = 0;

    // Named presets: Base(0,0,0), RawText(0,0,1), Conv(0,1,0), Expr3(3,0,0),
    // Expr3+Conv(3,1,0), Expr10+Conv(10,1,0).
    static RetrievalConfig preset(std::string_view name);
    static std::vector<std::string> preset_names();
};

struct KnowledgeIndex {
    std::string embedder_id;
    int dimension = 0;
    std::vector<KnowledgeItem> items;
};

// Builds one item per (character, train-plot experience), per conversation a
// character takes part in, and per plot raw text (when located). Held-out
// plots are never indexed when train_plots_only is set.
KnowledgeIndex build_index(const BookRecord& book, Embedder& embedder,
                           bool train_plots_only = true);

struct Snippet {
    KnowledgeKind kind;
    std::string text;
    double similarity = 0;
    int plot_index = 0;
};

// Exhaustive cosine scan restricted to the character's items: top-n per kind,
// ties broken by (similarity desc, plot_index asc), grouped experiences
// first, then conversations, then raw text. Snippets longer than
// max_snippet_chars are truncated (logged via warnings).
std::vector<Snippet> retrieve(const KnowledgeIndex& index, Embedder& embedder,
                              const std::string& character, const std::string& query,
                              const RetrievalConfig& cfg, size_t max_snippet_chars = 2000,
                              std::vector<std::string>* warnings = nullptr);

// Renders retrieved snippets as the prompt block body.
std::string snippets_to_text(const std::vector<Snippet>& snippets);

void save_index(const KnowledgeIndex& index, const std::string& items_path,
                const std::string& manifest_path);
KnowledgeIndex load_index(const std::string& items_path, const std::string& manifest_path);

}  // namespace gca
