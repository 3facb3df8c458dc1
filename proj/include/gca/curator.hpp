#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/gateway.hpp"

namespace gca {

struct BookMeta {
    std::string title;
    std::string author;
    bool in_domain = true;  // whether the book belongs to the training-book set
    std::string language = "English";
};

// --- chunking ---------------------------------------------------------------

struct ChunkConfig {
    // "moderate chunk sizes": bounds are configuration, sized so a prompt plus
    // chunk fits common context windows.
    std::size_t min_chars = 4000;
    std::size_t max_chars = 16000;
    // Per-line regexes marking chapter headings (chunk boundaries).
    std::vector<std::string> heading_patterns = default_heading_patterns();

    static std::vector<std::string> default_heading_patterns();
};

struct Chunk {
    std::size_t offset = 0;  // absolute offset into the source text
    std::string text;
};

// Heading-based chunking with small-chunk merging and paragraph-boundary
// splitting of oversized chunks. The concatenation of the returned texts is
// exactly the input. Throws EmptyText.
std::vector<Chunk> chunk_book(std::string_view text, const ChunkConfig& cfg = {});

// --- raw-span location ----------------------------------------------------

struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Simple punctuation+newline sentence segmentation; spans index into `text`.
std::vector<SentenceSpan> sentence_spans(std::string_view text);

// Normalized token-level LCS similarity: 2*LCS / (|a| + |b|).
double lcs_token_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct SpanMatch {
    std::size_t begin = 0;
    std::size_t end = 0;
    double first_score = 0;
    double last_score = 0;
};

// Matches the extracted boundary sentences against the chunk's sentences by
// LCS ratio and returns the [begin, end) character span. Throws NoMatch when
// the best score falls below `threshold`, InvertedSpan when the matches cross.
SpanMatch locate_raw_span(std::string_view chunk, std::string_view first_sentence,
                          std::string_view last_sentence, double threshold = 0.6);

// --- LLM extraction ---------------------------------------------------------

struct ExtractionResult {
    std::vector<Plot> plots;  // carried plots come back merged/extended
    std::optional<std::string> next_chunk_start;
    std::vector<std::string> warnings;
};

// Runs the data-extraction prompt over one window of text, merging carried
// truncated plots. Carried plots keep their original scenario and first
// sentence; the model's extension supplies the rest.
ExtractionResult extract_chunk(const std::string& window, const BookMeta& meta,
                               const std::vector<Plot>& carried, ChatBackend& extractor,
                               ChatBackend& repairer, const ChatParams& params = {});

// --- name unification -----------------------------------------------------

struct NameUnification {
    std::vector<std::string> named_characters;
    std::map<std::string, std::string> to_official_name;  // name -> canonical | "impersonal"
};

inline constexpr std::string_view kImpersonal = "impersonal";

NameUnification unify_names(const std::vector<std::string>& names, ChatBackend& backend,
                            ChatBackend& repairer, const std::string& language = "English",
                            std::vector<std::string>* warnings = nullptr);

// Follows the mapping with identity fallback; "impersonal" maps to itself.
std::string canonical_name(const std::map<std::string, std::string>& to_official,
                           const std::string& name);

// --- character aggregation -----------------------------------------------

// Collects a character's per-plot experiences (in book order) and
// conversation references. Throws UnknownCharacter when the name appears
// nowhere in the book.
CharacterRecord aggregate_character(const BookRecord& book, const std::string& name);

// Generates a profile for the aggregated record via the profile prompt; the
// response body after the ===Profile=== marker is the profile text.
std::string generate_profile(const BookRecord& book, const CharacterRecord& record,
                             ChatBackend& profiler, const std::string& language = "English",
                             const ChatParams& params = {});

// --- setting refinement ----------------------------------------------------

// Replaces the conversation's scenario and key-character motivations with the
// refiner's output. Dialogues are untouched. Throws SchemaViolation on
// missing response keys.
void refine_setting(Conversation& conversation, const Plot& plot, const BookMeta& meta,
                    ChatBackend& refiner, ChatBackend& repairer, const ChatParams& params = {},
                    std::vector<std::string>* warnings = nullptr);

// --- holdout & sampling --------------------------------------------------

struct HoldoutSplit {
    std::vector<int> train;  // plot indices, in book order
    std::vector<int> test;   // the final ceil(10%) of plots
};

HoldoutSplit split_holdout(const BookRecord& book);

struct SampleRef {
    std::string book_title;
    int plot_index = 0;
    int conversation_index = 0;
    double weight = 0;
    bool in_domain = true;
};

// Test-set sampling over held-out conversations: character weight =
// sqrt(plot count), conversation weight = mean of participant weights, then
// weighted sampling without replacement from the top half of each split's
// ranking. Deterministic under `seed`. Throws InsufficientPool.
std::vector<SampleRef> sample_test_set(const std::vector<BookRecord>& in_domain,
                                       const std::vector<BookRecord>& out_domain, int n_in,
                                       int n_out, std::uint64_t seed);

// --- full pipeline -------------------------------------------------------

struct CurationBackends {
    ChatBackend* extractor = nullptr;
    ChatBackend* repairer = nullptr;
    ChatBackend* namer = nullptr;
    ChatBackend* profiler = nullptr;
    ChatBackend* refiner = nullptr;
};

struct CurationOptions {
    ChunkConfig chunking;
    double span_threshold = 0.6;
    bool refine_settings = true;
    bool generate_profiles = true;
    ChatParams params;
    // Safety filter hook: conversations failing the predicate are dropped at
    // export. Default accepts everything.
    std::function<bool(const Conversation&)> conversation_filter;
};

// Plain text book -> corpus record: chunk, extract (with dynamic re-chunking
// and truncated-plot continuation), locate raw spans, unify names, aggregate
// characters, generate profiles, refine settings.
BookRecord curate_book(const std::string& text, const BookMeta& meta,
                       const CurationBackends& backends, const CurationOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);

}  // namespace gca
