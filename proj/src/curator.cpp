#include "gca/curator.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "gca/errors.hpp"
#include "gca/json_repair.hpp"
#include "gca/metrics.hpp"
#include "gca/prompts.hpp"
#include "gca/rng.hpp"
#include "gca/strings.hpp"

namespace gca {

// --- chunking -----------------------------------------------------------

std::vector<std::string> ChunkConfig::default_heading_patterns() {
    return {
        R"(^\s{0,8}(CHAPTER|Chapter)\b.*$)",
        R"(^\s{0,8}[IVXLCDM]+\.?\s*$)",
        R"(^\s{0,8}(PROLOGUE|EPILOGUE|Prologue|Epilogue)\b.*$)",
    };
}

namespace {

std::vector<std::size_t> heading_offsets(std::string_view text,
                                         const std::vector<std::string>& patterns) {
    std::vector<std::regex> regexes;
    regexes.reserve(patterns.size());
    for (const auto& p : patterns) regexes.emplace_back(p);

    std::vector<std::size_t> offsets;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        const std::string line(text.substr(line_start, line_end - line_start));
        for (const auto& re : regexes) {
            if (std::regex_match(line, re)) {
                if (line_start > 0) offsets.push_back(line_start);
                break;
            }
        }
        line_start = line_end + 1;
    }
    return offsets;
}

// positions just after a blank-line separator within [1, len)
std::vector<std::size_t> paragraph_breaks(std::string_view text) {
    std::vector<std::size_t> breaks;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] == '\n' && text[i + 1] == '\n') {
            std::size_t after = i + 2;
            while (after < text.size() && text[after] == '\n') ++after;
            if (after < text.size() && (breaks.empty() || breaks.back() != after))
                breaks.push_back(after);
        }
    }
    return breaks;
}

}  // namespace

std::vector<Chunk> chunk_book(std::string_view text, const ChunkConfig& cfg) {
    if (text.empty()) throw EmptyText("book text is empty");

    // initial boundaries at chapter headings
    std::vector<std::size_t> bounds = heading_offsets(text, cfg.heading_patterns);
    std::vector<Chunk> chunks;
    std::size_t prev = 0;
    for (std::size_t b : bounds) {
        chunks.push_back({prev, std::string(text.substr(prev, b - prev))});
        prev = b;
    }
    chunks.push_back({prev, std::string(text.substr(prev))});

    // merge adjacent small chunks
    std::vector<Chunk> merged;
    for (auto& chunk : chunks) {
        if (!merged.empty() && merged.back().text.size() < cfg.min_chars)
            merged.back().text += chunk.text;
        else
            merged.push_back(std::move(chunk));
    }
    if (merged.size() > 1 && merged.back().text.size() < cfg.min_chars) {
        merged[merged.size() - 2].text += merged.back().text;
        merged.pop_back();
    }

    // split oversized chunks at the paragraph break nearest each even cut
    std::vector<Chunk> out;
    for (auto& chunk : merged) {
        const std::size_t len = chunk.text.size();
        if (len <= cfg.max_chars) {
            out.push_back(std::move(chunk));
            continue;
        }
        const std::size_t parts = (len + cfg.max_chars - 1) / cfg.max_chars;
        const auto breaks = paragraph_breaks(chunk.text);
        std::vector<std::size_t> cuts;
        std::size_t last_cut = 0;
        for (std::size_t i = 1; i < parts; ++i) {
            const std::size_t target = i * len / parts;
            std::size_t best = target;  // hard cut when no paragraph break fits
            std::size_t best_dist = std::string::npos;
            for (std::size_t b : breaks) {
                if (b <= last_cut || b >= len) continue;
                const std::size_t dist = b > target ? b - target : target - b;
                if (dist < best_dist) {
                    best_dist = dist;
                    best = b;
                }
            }
            if (best > last_cut && best < len) {
                cuts.push_back(best);
                last_cut = best;
            }
        }
        std::size_t start = 0;
        for (std::size_t cut : cuts) {
            out.push_back({chunk.offset + start, chunk.text.substr(start, cut - start)});
            start = cut;
        }
        out.push_back({chunk.offset + start, chunk.text.substr(start)});
    }
    return out;
}

// --- sentences & span location -------------------------------------------

std::vector<SentenceSpan> sentence_spans(std::string_view text) {
    std::vector<SentenceSpan> spans;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        if (end > start && !is_blank(text.substr(start, end - start)))
            spans.push_back({start, end});
        start = end;
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            std::size_t end = i + 1;
            // carry trailing quotes/closers into the sentence
            while (end < text.size() &&
                   (text[end] == '"' || text[end] == '\'' || text[end] == ')' ||
                    text[end] == ']'))
                ++end;
            flush(end);
            i = end;
        } else if (c == '\n') {
            flush(i);
            start = i + 1;
            ++i;
        } else {
            ++i;
        }
    }
    flush(text.size());
    return spans;
}

double lcs_token_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return 2.0 * static_cast<double>(prev[b.size()]) /
           static_cast<double>(a.size() + b.size());
}

namespace {

struct SentenceMatch {
    std::size_t index = 0;
    double score = -1.0;
};

SentenceMatch best_sentence(const std::vector<std::vector<std::string>>& sentence_tokens,
                            const std::vector<std::string>& target) {
    SentenceMatch best;
    for (std::size_t i = 0; i < sentence_tokens.size(); ++i) {
        const double score = lcs_token_ratio(sentence_tokens[i], target);
        if (score > best.score) {
            best.score = score;
            best.index = i;
        }
    }
    return best;
}

}  // namespace

SpanMatch locate_raw_span(std::string_view chunk, std::string_view first_sentence,
                          std::string_view last_sentence, double threshold) {
    const auto spans = sentence_spans(chunk);
    if (spans.empty()) throw NoMatch("chunk has no sentences");
    std::vector<std::vector<std::string>> sentence_tokens;
    sentence_tokens.reserve(spans.size());
    for (const auto& s : spans)
        sentence_tokens.push_back(tokenize(chunk.substr(s.begin, s.end - s.begin)));

    const auto first = best_sentence(sentence_tokens, tokenize(first_sentence));
    const auto last = best_sentence(sentence_tokens, tokenize(last_sentence));
    if (first.score < threshold)
        throw NoMatch("first sentence match score " + std::to_string(first.score) +
                      " below threshold");
    if (last.score < threshold)
        throw NoMatch("last sentence match score " + std::to_string(last.score) +
                      " below threshold");
    if (first.index > last.index)
        throw InvertedSpan("first sentence matches after last sentence");

    SpanMatch match;
    match.begin = spans[first.index].begin;
    match.end = spans[last.index].end;
    match.first_score = first.score;
    match.last_score = last.score;
    return match;
}

// --- extraction -----------------------------------------------------------

ExtractionResult extract_chunk(const std::string& window, const BookMeta& meta,
                               const std::vector<Plot>& carried, ChatBackend& extractor,
                               ChatBackend& repairer, const ChatParams& params) {
    std::string truncated_plots = "None";
    if (!carried.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& p : carried) {
            ordered_json doc{{"chapter_title",
                              p.chapter_title ? ordered_json(*p.chapter_title) : ordered_json(nullptr)},
                             {"first_sentence", p.first_sentence},
                             {"summary", p.summary},
                             {"state", "truncated"}};
            ordered_json convs = ordered_json::array();
            for (const auto& c : p.conversations) convs.push_back(conversation_to_json(c));
            doc["conversation"] = std::move(convs);
            arr.push_back(std::move(doc));
        }
        truncated_plots = arr.dump(2);
    }

    ChatRequest req;
    req.system = prompts::fill(prompts::asset("curation_extract"),
                               {{"book_title", meta.title},
                                {"book_author", meta.author},
                                {"chunk", window},
                                {"truncated_plots", truncated_plots}});
    req.params = params;
    const ChatResponse res = extractor.complete(req);

    RepairOptions ropts;
    ropts.params = params;
    json doc = parse_json_with_repair(res.content, require_keys({"plots"}), repairer, ropts);

    ExtractionResult result;
    for (const auto& pj : doc.at("plots")) {
        for (const char* key : {"first_sentence", "last_sentence", "summary", "state"}) {
            if (!pj.contains(key))
                throw SchemaViolation(std::string("extracted plot lacks required key '") + key +
                                      "'");
        }
        result.plots.push_back(plot_from_json(pj, &result.warnings));
    }

    // the first |carried| plots are the extended continuations; pin the
    // fields the extension must not change
    for (std::size_t i = 0; i < carried.size() && i < result.plots.size(); ++i) {
        Plot& merged = result.plots[i];
        const Plot& prior = carried[i];
        merged.first_sentence = prior.first_sentence;
        if (!merged.chapter_title && prior.chapter_title) merged.chapter_title = prior.chapter_title;
        for (std::size_t c = 0;
             c < merged.conversations.size() && c < prior.conversations.size(); ++c) {
            if (merged.conversations[c].scenario != prior.conversations[c].scenario) {
                result.warnings.push_back("extension changed scenario of carried plot " +
                                          std::to_string(i) + "; keeping the original");
                merged.conversations[c].scenario = prior.conversations[c].scenario;
            }
        }
    }

    if (doc.contains("next_chunk_start") && doc.at("next_chunk_start").is_string()) {
        const auto s = doc.at("next_chunk_start").get<std::string>();
        if (!s.empty() && s != "None") result.next_chunk_start = s;
    }
    return result;
}

// --- name unification -------------------------------------------------------

NameUnification unify_names(const std::vector<std::string>& names, ChatBackend& backend,
                            ChatBackend& repairer, const std::string& language,
                            std::vector<std::string>* warnings) {
    NameUnification out;
    if (names.empty()) return out;

    ordered_json input = ordered_json(names);
    ChatRequest req;
    req.system = prompts::fill(prompts::asset("curation_unify_names"),
                               {{"language", language}, {"character_names", input.dump()}});
    const ChatResponse res = backend.complete(req);

    json doc = parse_json_with_repair(res.content, nullptr, repairer);
    if (!doc.contains("named_characters") || !doc.contains("to_official_name"))
        throw SchemaViolation("unify_names response lacks named_characters/to_official_name");

    std::set<std::string> seen;
    for (const auto& n : doc.at("named_characters")) {
        const auto name = n.get<std::string>();
        if (seen.insert(name).second) out.named_characters.push_back(name);
    }
    for (const auto& [alias, canon] : doc.at("to_official_name").items())
        out.to_official_name[alias] = canon.get<std::string>();

    // guarantee totality: every input name maps somewhere
    for (const auto& name : names) {
        if (!out.to_official_name.count(name)) {
            if (warnings)
                warnings->push_back("unify_names: no mapping for '" + name +
                                    "'; keeping it as its own canonical name");
            out.to_official_name[name] = name;
            if (seen.insert(name).second) out.named_characters.push_back(name);
        }
    }
    // canonical names map to themselves, making the mapping idempotent
    for (const auto& canon : out.named_characters) {
        auto it = out.to_official_name.find(canon);
        if (it == out.to_official_name.end()) out.to_official_name[canon] = canon;
    }
    return out;
}

std::string canonical_name(const std::map<std::string, std::string>& to_official,
                           const std::string& name) {
    auto it = to_official.find(name);
    if (it == to_official.end() || it->second == kImpersonal || it->second.empty()) return name;
    if (it->second == name) return name;
    // follow one level of chaining (alias -> alias -> canonical)
    return canonical_name(to_official, it->second);
}

// --- aggregation & profiles ---------------------------------------------

CharacterRecord aggregate_character(const BookRecord& book, const std::string& name) {
    CharacterRecord rec;
    rec.canonical_name = name;
    for (std::size_t p = 0; p < book.plots.size(); ++p) {
        const Plot& plot = book.plots[p];
        for (const auto& kc : plot.key_characters) {
            if (kc.name == name) {
                rec.experiences.push_back({static_cast<int>(p), kc.description, kc.summary});
                break;
            }
        }
        for (std::size_t c = 0; c < plot.conversations.size(); ++c) {
            const auto participants = plot.conversations[c].participants();
            if (std::find(participants.begin(), participants.end(), name) != participants.end())
                rec.conversation_refs.push_back({static_cast<int>(p), static_cast<int>(c)});
        }
    }
    if (rec.experiences.empty() && rec.conversation_refs.empty())
        throw UnknownCharacter("character '" + name + "' appears nowhere in the book");
    rec.major = !rec.experiences.empty();
    return rec;
}

namespace {

std::string character_data_block(const BookRecord& book, const CharacterRecord& rec) {
    std::string data = "==Experiences==\n";
    for (const auto& exp : rec.experiences) {
        data += "- Plot " + std::to_string(exp.plot_index + 1) + ": ";
        if (!exp.description.empty()) data += exp.description + " ";
        data += exp.summary + "\n";
        const auto& plot = book.plots[static_cast<std::size_t>(exp.plot_index)];
        if (!plot.summary.empty()) data += "  Plot summary: " + plot.summary + "\n";
    }
    data += "\n==Dialogue Samples==\n";
    std::size_t quoted = 0;
    for (const auto& ref : rec.conversation_refs) {
        if (quoted >= 20) break;
        const auto& conv = book.plots[static_cast<std::size_t>(ref.plot_index)]
                               .conversations[static_cast<std::size_t>(ref.conversation_index)];
        for (const auto& m : conv.dialogues) {
            if (m.character != rec.canonical_name) continue;
            data += rec.canonical_name + ": " + m.surface() + "\n";
            if (++quoted >= 20) break;
        }
    }
    return data;
}

}  // namespace

std::string generate_profile(const BookRecord& book, const CharacterRecord& record,
                             ChatBackend& profiler, const std::string& language,
                             const ChatParams& params) {
    ChatRequest req;
    req.system = prompts::fill(prompts::asset("curation_profile"),
                               {{"character_name", record.canonical_name},
                                {"book_title", book.title},
                                {"language", language},
                                {"character_data", character_data_block(book, record)}});
    req.params = params;
    const ChatResponse res = profiler.complete(req);
    static constexpr std::string_view kMarker = "===Profile===";
    const std::size_t pos = res.content.find(kMarker);
    if (pos == std::string::npos) return trim(res.content);
    return trim(res.content.substr(pos + kMarker.size()));
}

// --- setting refinement -----------------------------------------------------

void refine_setting(Conversation& conversation, const Plot& plot, const BookMeta& meta,
                    ChatBackend& refiner, ChatBackend& repairer, const ChatParams& params,
                    std::vector<std::string>* warnings) {
    ChatRequest req;
    req.system = prompts::fill(prompts::asset("curation_refine"),
                               {{"book", meta.title},
                                {"plot_summary", plot.summary},
                                {"conversation", conversation_to_json(conversation).dump(2)}});
    req.params = params;
    const ChatResponse res = refiner.complete(req);

    RepairOptions ropts;
    ropts.params = params;
    json doc = parse_json_with_repair(res.content, nullptr, repairer, ropts);
    if (!doc.contains("scenario") || !doc.contains("key_characters"))
        throw SchemaViolation("refined setting lacks scenario/key_characters");

    conversation.scenario = doc.at("scenario").get<std::string>();
    for (const auto& kc : doc.at("key_characters")) {
        if (!kc.contains("name") || !kc.contains("motivation"))
            throw SchemaViolation("refined key_characters entry lacks name/motivation");
        const auto name = kc.at("name").get<std::string>();
        bool found = false;
        for (auto& existing : conversation.key_characters) {
            if (existing.name == name) {
                existing.motivation = kc.at("motivation").get<std::string>();
                found = true;
                break;
            }
        }
        if (!found && warnings)
            warnings->push_back("refinement mentions unknown character '" + name + "'");
    }
}

// --- holdout & sampling -----------------------------------------------------

HoldoutSplit split_holdout(const BookRecord& book) {
    const int n = static_cast<int>(book.plots.size());
    HoldoutSplit split;
    if (n == 0) return split;
    const int held = static_cast<int>(std::ceil(0.10 * n));
    for (int i = 0; i < n - held; ++i) split.train.push_back(i);
    for (int i = n - held; i < n; ++i) split.test.push_back(i);
    return split;
}

namespace {

std::map<std::string, int> character_plot_counts(const BookRecord& book) {
    std::map<std::string, int> counts;
    for (const auto& plot : book.plots) {
        std::set<std::string> in_plot;
        for (const auto& kc : plot.key_characters) in_plot.insert(kc.name);
        for (const auto& conv : plot.conversations)
            for (const auto& name : conv.participants()) in_plot.insert(name);
        for (const auto& name : in_plot) ++counts[name];
    }
    return counts;
}

std::vector<SampleRef> ranked_pool(const std::vector<BookRecord>& books, bool in_domain) {
    std::vector<SampleRef> pool;
    for (const auto& book : books) {
        const auto counts = character_plot_counts(book);
        const auto split = split_holdout(book);
        for (int p : split.test) {
            const Plot& plot = book.plots[static_cast<std::size_t>(p)];
            for (std::size_t c = 0; c < plot.conversations.size(); ++c) {
                const auto participants = plot.conversations[c].participants();
                if (participants.empty()) continue;
                double sum = 0;
                for (const auto& name : participants) {
                    auto it = counts.find(name);
                    sum += std::sqrt(static_cast<double>(it == counts.end() ? 0 : it->second));
                }
                SampleRef ref;
                ref.book_title = book.title;
                ref.plot_index = p;
                ref.conversation_index = static_cast<int>(c);
                ref.weight = sum / static_cast<double>(participants.size());
                ref.in_domain = in_domain;
                pool.push_back(ref);
            }
        }
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const SampleRef& a, const SampleRef& b) { return a.weight > b.weight; });
    return pool;
}

std::vector<SampleRef> draw_from(std::vector<SampleRef> pool, int n, Rng& rng,
                                 const char* split_name) {
    // keep the top half of the ranking
    const std::size_t keep = (pool.size() + 1) / 2;
    pool.resize(keep);
    if (static_cast<int>(pool.size()) < n)
        throw InsufficientPool(std::string(split_name) + ": top half holds " +
                               std::to_string(pool.size()) + " conversations, need " +
                               std::to_string(n));
    std::vector<SampleRef> out;
    for (int i = 0; i < n; ++i) {
        std::vector<double> weights;
        weights.reserve(pool.size());
        for (const auto& ref : pool) weights.push_back(ref.weight);
        const std::size_t pick = rng.next_weighted(weights);
        out.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

}  // namespace

std::vector<SampleRef> sample_test_set(const std::vector<BookRecord>& in_domain,
                                       const std::vector<BookRecord>& out_domain, int n_in,
                                       int n_out, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "sample-test"));
    std::vector<SampleRef> out;
    if (n_in > 0) {
        auto picked = draw_from(ranked_pool(in_domain, true), n_in, rng, "in-domain");
        out.insert(out.end(), picked.begin(), picked.end());
    }
    if (n_out > 0) {
        auto picked = draw_from(ranked_pool(out_domain, false), n_out, rng, "out-of-domain");
        out.insert(out.end(), picked.begin(), picked.end());
    }
    return out;
}

// --- full pipeline ---------------------------------------------------------

BookRecord curate_book(const std::string& text, const BookMeta& meta,
                       const CurationBackends& backends, const CurationOptions& options,
                       std::vector<std::string>* warnings) {
    if (!backends.extractor || !backends.repairer)
        throw ConfigError("curate_book needs extractor and repairer backends");
    auto warn = [warnings](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };

    BookRecord book;
    book.title = meta.title;
    book.author = meta.author;

    const auto chunks = chunk_book(text, options.chunking);

    // windows walk the static chunks, splicing trailing storylines forward
    struct Pending {
        Plot plot;
        std::optional<std::size_t> abs_begin;  // located start of the raw span
    };
    std::vector<Pending> carried;
    std::string leftover;
    std::size_t window_base = 0;

    auto locate_begin = [&](const Plot& plot, const std::string& window,
                            std::size_t base) -> std::optional<std::size_t> {
        try {
            const auto span = locate_raw_span(window, plot.first_sentence, plot.first_sentence,
                                              options.span_threshold);
            return base + span.begin;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
        const std::string window = leftover + chunks[ci].text;
        const std::size_t base = leftover.empty() ? chunks[ci].offset : window_base;

        std::vector<Plot> carried_plots;
        carried_plots.reserve(carried.size());
        for (const auto& p : carried) carried_plots.push_back(p.plot);

        ExtractionResult extracted = extract_chunk(window, meta, carried_plots,
                                                   *backends.extractor, *backends.repairer,
                                                   options.params);
        for (auto& w : extracted.warnings) warn(std::move(w));

        std::vector<Pending> next_carried;
        for (std::size_t i = 0; i < extracted.plots.size(); ++i) {
            Plot& plot = extracted.plots[i];
            std::optional<std::size_t> abs_begin;
            if (i < carried.size())
                abs_begin = carried[i].abs_begin;  // began in an earlier window
            else
                abs_begin = locate_begin(plot, window, base);
            if (!abs_begin)
                warn("could not locate start of plot '" + plot.first_sentence.substr(0, 40) +
                     "...'");

            if (plot.state == PlotState::truncated && ci + 1 < chunks.size()) {
                next_carried.push_back({std::move(plot), abs_begin});
                continue;
            }
            if (plot.state == PlotState::truncated)
                warn("plot still truncated at end of book: " + plot.summary.substr(0, 40));

            // finished (or end of book): close out the raw span
            if (abs_begin) {
                try {
                    const auto span = locate_raw_span(window, plot.last_sentence,
                                                      plot.last_sentence, options.span_threshold);
                    const std::size_t abs_end = base + span.end;
                    if (abs_end > *abs_begin)
                        plot.raw_text = text.substr(*abs_begin, abs_end - *abs_begin);
                } catch (const Error& e) {
                    warn(std::string("raw span not located: ") + e.what());
                }
            }
            book.plots.push_back(std::move(plot));
        }
        carried = std::move(next_carried);

        // dynamic re-chunking: trailing storyline text moves into the next window
        leftover.clear();
        if (extracted.next_chunk_start && ci + 1 < chunks.size()) {
            const std::string& marker = *extracted.next_chunk_start;
            std::size_t pos = window.find(marker);
            if (pos == std::string::npos) {
                try {
                    const auto span =
                        locate_raw_span(window, marker, marker, options.span_threshold);
                    pos = span.begin;
                } catch (const Error&) {
                    warn("next_chunk_start not found in window; no splice");
                    pos = std::string::npos;
                }
            }
            if (pos != std::string::npos) {
                leftover = window.substr(pos);
                window_base = base + pos;
            }
        }
    }
    for (auto& pending : carried) {
        warn("plot never finished: " + pending.plot.summary.substr(0, 40));
        book.plots.push_back(std::move(pending.plot));
    }

    // name unification across every extracted name
    if (backends.namer) {
        std::set<std::string> name_set;
        for (const auto& plot : book.plots) {
            for (const auto& kc : plot.key_characters) name_set.insert(kc.name);
            for (const auto& conv : plot.conversations) {
                for (const auto& kc : conv.key_characters) name_set.insert(kc.name);
                for (const auto& m : conv.dialogues)
                    if (m.character != kEnvironmentName) name_set.insert(m.character);
            }
        }
        const std::vector<std::string> names(name_set.begin(), name_set.end());
        const auto unified =
            unify_names(names, *backends.namer, *backends.repairer, meta.language, warnings);

        auto rename = [&](std::string& name) {
            const std::string canon = canonical_name(unified.to_official_name, name);
            if (canon != name && unified.to_official_name.count(name) &&
                unified.to_official_name.at(name) != kImpersonal)
                name = canon;
        };
        for (auto& plot : book.plots) {
            for (auto& kc : plot.key_characters) rename(kc.name);
            for (auto& conv : plot.conversations) {
                for (auto& kc : conv.key_characters) rename(kc.name);
                for (auto& m : conv.dialogues)
                    if (m.character != kEnvironmentName) rename(m.character);
            }
        }

        // reverse alias lists
        std::map<std::string, std::vector<std::string>> aliases;
        for (const auto& [alias, canon] : unified.to_official_name) {
            if (canon == kImpersonal || alias == canon) continue;
            const std::string resolved = canonical_name(unified.to_official_name, alias);
            if (resolved != alias) aliases[resolved].push_back(alias);
        }

        for (const auto& canon : unified.named_characters) {
            if (canon == kImpersonal) continue;
            try {
                CharacterRecord rec = aggregate_character(book, canon);
                if (auto it = aliases.find(canon); it != aliases.end()) rec.aliases = it->second;
                book.characters.emplace(canon, std::move(rec));
            } catch (const UnknownCharacter&) {
                warn("unified name '" + canon + "' appears nowhere after renaming");
            }
        }
    }

    if (options.generate_profiles && backends.profiler) {
        for (auto& [name, rec] : book.characters) {
            if (!rec.major) continue;
            rec.profile = generate_profile(book, rec, *backends.profiler, meta.language,
                                           options.params);
        }
    }

    if (options.refine_settings && backends.refiner) {
        for (auto& plot : book.plots) {
            for (auto& conv : plot.conversations)
                refine_setting(conv, plot, meta, *backends.refiner, *backends.repairer,
                               options.params, warnings);
        }
    }

    if (options.conversation_filter) {
        for (auto& plot : book.plots) {
            auto& convs = plot.conversations;
            const auto before = convs.size();
            convs.erase(std::remove_if(convs.begin(), convs.end(),
                                       [&](const Conversation& c) {
                                           return !options.conversation_filter(c);
                                       }),
                        convs.end());
            if (convs.size() != before)
                warn("safety filter removed " + std::to_string(before - convs.size()) +
                     " conversation(s)");
        }
    }
    return book;
}

}  // namespace gca
